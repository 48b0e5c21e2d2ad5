#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "diiq/distance.hpp"
#include "diiq/rng.hpp"

namespace diiq {

constexpr float kErrSentinel = std::numeric_limits<float>::infinity();

struct BridgeInfo {
    int a_feas = 0;
    StateVec s_feas;
    int l_feas = 0;
};

// One observed expert transition plus everything the agent learns about it:
// the inferred action, its error, the training counter and bridge data.
struct ExpertRecord {
    StateVec s_e;
    StateVec s_e_next;
    int a_e = 0;
    float err_a_e = kErrSentinel;
    int c_s_e = 0;
    std::optional<std::uint32_t> next_in_chain;
    bool infeasible = false;
    std::optional<BridgeInfo> bridge;
    std::uint32_t expert_id = 0;
};

// Observation-only dataset. (s_e, s_e') pairs are immutable after load;
// inference fields, counters and bridges mutate during training.
class ExpertDataset {
  public:
    ExpertDataset(const MetricSpec& metric, int agent_action_count, int c_max,
                  float chain_epsilon = 0.0f);

    // Builds records from raw transitions: random initial inferred actions,
    // sentinel errors, zero counters; reconstructs chains.
    static ExpertDataset load(const std::vector<std::pair<StateVec, StateVec>>& transitions,
                              const MetricSpec& metric, int agent_action_count, int c_max,
                              Rng& rng, float chain_epsilon = 0.0f,
                              const std::vector<std::uint32_t>& expert_ids = {});

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const ExpertRecord& record(std::uint32_t i) const { return records_.at(i); }
    ExpertRecord& mutable_record(std::uint32_t i) { return records_.at(i); }
    const MetricSpec& metric() const { return metric_; }
    const DistanceBounds& dist_bounds() const { return bounds_; }
    int c_max() const { return c_max_; }

    // Exact k-nearest initial states to `query`; ties broken by record index.
    std::vector<std::uint32_t> knn(const StateVec& query, int k) const;

    // Strict-improvement action inference over the candidate records.
    void infer_actions(const StateVec& s_a, int a_a, const StateVec& s_a_next,
                       const std::vector<std::uint32_t>& candidates);

    // KNN + similarity filter + uniform pick. Increments the counter of every
    // survivor (chosen or not). Returns nothing when no candidate is similar
    // enough, in which case no counter moves.
    std::optional<std::uint32_t> sample_similar(const StateVec& s_a, int k, float tau_similar,
                                                Rng& rng);

    // Links each record to the lowest-index record whose initial state equals
    // its next state (within chain_epsilon; 0 means exact).
    void build_chains();

    // Inference reliability in [0,1]: 1 - err/err_max, 0 for sentinel errors.
    float reliability(std::uint32_t i) const;

    void increment_counter(std::uint32_t i);

    // Binary file round-trip (immutable part + expert ids only).
    void save(const std::string& path) const;
    static ExpertDataset load_file(const std::string& path, int agent_action_count, int c_max,
                                   Rng& rng, float chain_epsilon = 0.0f);

    const std::vector<ExpertRecord>& records() const { return records_; }

    // Snapshot statistics for the metrics log.
    struct Stats {
        double mean_err = 0.0;  // sentinel counted as err_max
        double infeasible_fraction = 0.0;
        std::uint32_t bridge_count = 0;
        double mean_bridge_length = 0.0;
    };
    Stats stats() const;

  private:
    void append(StateVec s, StateVec sn, std::uint32_t expert_id, Rng& rng);

    MetricSpec metric_;
    DistanceBounds bounds_;
    int agent_action_count_;
    int c_max_;
    float chain_epsilon_;
    std::vector<ExpertRecord> records_;
};

// The immutable file content: state pairs plus per-record expert provenance.
struct RawDataset {
    MetricSpec metric;
    std::vector<std::pair<StateVec, StateVec>> transitions;
    std::vector<std::uint32_t> expert_ids;
};

void write_dataset_file(const std::string& path, const RawDataset& raw);
RawDataset read_dataset_file(const std::string& path);

}  // namespace diiq
