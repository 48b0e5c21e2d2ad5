#pragma once

#include <string>
#include <vector>

namespace diiq {

using StateVec = std::vector<float>;

enum class MetricKind {
    EuclideanNormalized,  // low-dimensional states, every component in [0,1]
    HammingStatic,        // multi-channel binary grids, fixed per-channel weights
    HammingDynamic,       // multi-channel binary grids, sparsity-based weights
};

MetricKind metric_kind_from_string(const std::string& s);
std::string metric_kind_to_string(MetricKind k);

// Describes how to compare two states. Euclidean mode needs only state_dim;
// the Hamming modes interpret states as channels*height*width binary grids.
struct MetricSpec {
    MetricKind kind = MetricKind::EuclideanNormalized;
    int state_dim = 0;  // euclidean mode
    int channels = 0;   // hamming modes
    int height = 0;
    int width = 0;
    std::vector<float> static_channel_weights;  // hamming-static only
    float w_base = 1.0f;
    float lambda = 2.0f;
    float rho_max = 1.0f;

    int total_dim() const;
    void validate() const;  // throws std::invalid_argument on bad spec
};

struct DistanceBounds {
    float d_max_state = 0.0f;
    float err_max_transition = 0.0f;  // always 2 * d_max_state
};

// Distance between two states under the spec. Throws on dimension mismatch;
// euclidean mode also rejects components outside [0,1].
float state_distance(const MetricSpec& spec, const StateVec& a, const StateVec& b);

// Distance between transitions (s1,s1') and (s2,s2'): sum of the two
// endpoint distances, so it is bounded by 2*d_max.
float transition_distance(const MetricSpec& spec, const StateVec& s1, const StateVec& s1n,
                          const StateVec& s2, const StateVec& s2n);

DistanceBounds bounds(const MetricSpec& spec);

// Largest distance still accepted as "similar at level tau": (1-tau)*d_max.
// tau close to 1 admits only near-exact matches.
float similarity_threshold_distance(const MetricSpec& spec, float tau);

}  // namespace diiq
