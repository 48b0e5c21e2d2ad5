#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "diiq/expert.hpp"

namespace diiq {

struct BridgeConfig {
    float tau_infeas = 0.95f;  // error-percentile infeasibility threshold
    int agent_depth = 4;       // max agent-side search depth (k)
    int expert_depth = 3;      // max expert-side chain depth (n)
    int update_interval = 1000;
    float match_tau = 0.0f;    // state quantization step for matching; 0 = exact

    void validate() const;
};

// Quantized state identity used to match agent states against expert states.
// match_tau == 0 keys on the exact bit pattern.
struct StateKey {
    std::vector<std::int32_t> q;
    bool operator==(const StateKey&) const = default;
};

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const {
        std::size_t h = 1469598103934665603ull;
        for (std::int32_t v : k.q) {
            h ^= static_cast<std::uint32_t>(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

StateKey make_state_key(const StateVec& s, float match_tau);

// Graph of transitions the agent has actually executed, aggregated from the
// replay buffer with multiplicity counts so evictions can be undone.
class AgentTrajectoryView {
  public:
    explicit AgentTrajectoryView(float match_tau) : match_tau_(match_tau) {}

    void add_transition(const StateVec& s, int action, const StateVec& s_next);
    void remove_transition(const StateVec& s, int action, const StateVec& s_next);

    struct Edge {
        int action = 0;
        StateKey next;
        StateVec next_state;  // representative actual state behind `next`
        int count = 0;
    };

    const std::vector<Edge>* edges(const StateKey& from) const;
    float match_tau() const { return match_tau_; }
    std::size_t node_count() const { return adj_.size(); }

  private:
    float match_tau_;
    std::unordered_map<StateKey, std::vector<Edge>, StateKeyHash> adj_;
};

// Infeasibility marking and bridge discovery over one expert dataset. The
// expert-side key index is built once (initial states never change).
class BridgeEngine {
  public:
    BridgeEngine(const BridgeConfig& cfg, const ExpertDataset& ds);

    // infeasible <- err above the tau_infeas percentile of finite errors, or
    // still at the sentinel. Reclassifies in both directions. Returns the
    // number of records currently infeasible.
    int mark_infeasible(ExpertDataset& ds) const;

    // Expert states reachable from record `idx`'s next state within `n` hops,
    // following chains and cross-referencing matching initial states. Depth 1
    // is s_e' itself; cycles are cut by a visited set.
    std::vector<std::pair<StateVec, int>> expert_forward_states(const ExpertDataset& ds,
                                                                std::uint32_t idx, int n) const;

    // Shortest agent-executable path (<= agent_depth) from states matching
    // record `idx`'s s_e to any expert forward state. Ties broken by the
    // lexicographically smallest action sequence.
    std::optional<BridgeInfo> find_bridge(const AgentTrajectoryView& traj, const ExpertDataset& ds,
                                          std::uint32_t idx) const;

    // mark_infeasible, then search every infeasible record that lacks a
    // bridge or could get a shorter one; stores only improvements.
    void refresh(ExpertDataset& ds, const AgentTrajectoryView& traj) const;

    const BridgeConfig& config() const { return cfg_; }

  private:
    BridgeConfig cfg_;
    std::unordered_map<StateKey, std::vector<std::uint32_t>, StateKeyHash> starts_at_;
};

}  // namespace diiq
