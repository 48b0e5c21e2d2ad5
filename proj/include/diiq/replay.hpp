#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "diiq/rng.hpp"

namespace diiq {

using StateVec = std::vector<float>;

// One agent transition plus an optional reference into the expert dataset
// (the record whose initial state passed the similarity filter when this
// sample was stored).
struct AugmentedExperience {
    StateVec s_a;
    int a_a = 0;
    float r = 0.0f;
    StateVec s_a_next;
    bool done = false;
    std::optional<std::uint32_t> expert_ref;
};

// Binary sum-tree over leaf priorities. Leaves hold p^alpha; doubles keep
// the path sums tight enough for the tree-vs-linear-scan equivalence.
class SumTree {
  public:
    explicit SumTree(std::uint32_t capacity);  // capacity must be a power of two

    void set(std::uint32_t leaf, double value);
    double get(std::uint32_t leaf) const;
    double total() const { return nodes_[1]; }
    std::uint32_t capacity() const { return capacity_; }

    // Index of the leaf owning `target` in the prefix-sum order:
    // smallest i with target < sum(leaf_0..leaf_i).
    std::uint32_t find_prefix(double target) const;

  private:
    std::uint32_t capacity_;
    std::vector<double> nodes_;  // 1-based heap layout; leaves at [capacity, 2*capacity)
};

struct SampledExperience {
    std::uint32_t index = 0;
    const AugmentedExperience* exp = nullptr;
    float is_weight = 1.0f;
};

// Proportional prioritized replay over a ring buffer.
class ReplayMemory {
  public:
    explicit ReplayMemory(std::uint32_t capacity, float epsilon_priority = 1e-5f);

    // Inserts with priority equal to the running max (1.0 while empty);
    // returns the evicted experience when the ring wraps.
    std::optional<AugmentedExperience> push(AugmentedExperience exp);

    // Stratified proportional sampling: P(i) = p_i^alpha / sum p^alpha.
    // is_weight = (N * P(i))^-beta, normalized so the batch max is 1.
    std::vector<SampledExperience> sample(std::uint32_t batch, float alpha, float beta, Rng& rng);

    // priority <- |td| + epsilon (alpha is applied at sampling time).
    void update_priorities(const std::vector<std::uint32_t>& indices,
                           const std::vector<float>& td_errors);

    std::uint32_t size() const { return size_; }
    std::uint32_t capacity() const { return capacity_; }
    const AugmentedExperience& at(std::uint32_t i) const { return items_[i]; }
    double raw_priority(std::uint32_t i) const { return raw_priority_[i]; }

    // Oldest-to-newest indices, for trajectory inspection.
    std::vector<std::uint32_t> insertion_order() const;

  private:
    void apply_alpha(float alpha);

    std::uint32_t capacity_;
    float eps_prio_;
    std::vector<AugmentedExperience> items_;
    std::vector<double> raw_priority_;
    SumTree tree_;
    std::uint32_t write_ = 0;
    std::uint32_t size_ = 0;
    double max_raw_priority_ = 1.0;
    float current_alpha_ = -1.0f;  // exponent the tree currently reflects
};

// Linear schedule value: from `start` at step 0 to `end` at step `horizon`,
// clamped afterwards. Used for the PER beta and epsilon-greedy schedules.
float linear_schedule(float start, float end, std::int64_t horizon, std::int64_t step);

}  // namespace diiq
