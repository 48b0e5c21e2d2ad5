#pragma once

#include <cstdint>
#include <random>

namespace diiq {

// splitmix64, used to derive independent stream seeds from one run seed.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t stream_id) {
    std::uint64_t s = run_seed ^ (0xabcdef1234567890ull + stream_id * 0x9e3779b97f4a7c15ull);
    return splitmix64(s);
}

using Rng = std::mt19937_64;

// Uniform in [0,1). Hand-rolled so the draw sequence is fully under our
// control (std::uniform_real_distribution is implementation-defined).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Modulo bias is negligible for the small n
// used here (action sets, batch indices).
inline int uniform_int(Rng& rng, int n) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

inline float uniform_range(Rng& rng, float lo, float hi) {
    return lo + static_cast<float>(uniform01(rng)) * (hi - lo);
}

}  // namespace diiq
