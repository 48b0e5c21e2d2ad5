#include "diiq/bridge.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace diiq {

void BridgeConfig::validate() const {
    if (!(tau_infeas > 0.0f && tau_infeas < 1.0f))
        throw std::invalid_argument("tau_infeas must be in (0,1)");
    if (agent_depth < 1) throw std::invalid_argument("agent_depth must be >= 1");
    if (expert_depth < 0) throw std::invalid_argument("expert_depth must be >= 0");
    if (update_interval < 1) throw std::invalid_argument("update_interval must be >= 1");
    if (match_tau < 0.0f) throw std::invalid_argument("match_tau must be >= 0");
}

StateKey make_state_key(const StateVec& s, float match_tau) {
    StateKey k;
    k.q.reserve(s.size());
    if (match_tau <= 0.0f) {
        for (float f : s) k.q.push_back(std::bit_cast<std::int32_t>(f));
    } else {
        for (float f : s)
            k.q.push_back(static_cast<std::int32_t>(std::floor(f / match_tau)));
    }
    return k;
}

void AgentTrajectoryView::add_transition(const StateVec& s, int action, const StateVec& s_next) {
    StateKey from = make_state_key(s, match_tau_);
    StateKey to = make_state_key(s_next, match_tau_);
    auto& edges = adj_[from];
    for (auto& e : edges) {
        if (e.action == action && e.next == to) {
            ++e.count;
            return;
        }
    }
    edges.push_back(Edge{action, std::move(to), s_next, 1});
}

void AgentTrajectoryView::remove_transition(const StateVec& s, int action, const StateVec& s_next) {
    StateKey from = make_state_key(s, match_tau_);
    auto it = adj_.find(from);
    if (it == adj_.end()) return;
    StateKey to = make_state_key(s_next, match_tau_);
    auto& edges = it->second;
    for (size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].action == action && edges[i].next == to) {
            if (--edges[i].count <= 0) edges.erase(edges.begin() + i);
            break;
        }
    }
    if (edges.empty()) adj_.erase(it);
}

const std::vector<AgentTrajectoryView::Edge>* AgentTrajectoryView::edges(const StateKey& from) const {
    auto it = adj_.find(from);
    return it == adj_.end() ? nullptr : &it->second;
}

BridgeEngine::BridgeEngine(const BridgeConfig& cfg, const ExpertDataset& ds) : cfg_(cfg) {
    cfg_.validate();
    for (std::uint32_t i = 0; i < ds.size(); ++i)
        starts_at_[make_state_key(ds.record(i).s_e, cfg_.match_tau)].push_back(i);
}

int BridgeEngine::mark_infeasible(ExpertDataset& ds) const {
    if (ds.empty()) return 0;
    std::vector<float> finite;
    finite.reserve(ds.size());
    for (std::uint32_t i = 0; i < ds.size(); ++i) {
        float e = ds.record(i).err_a_e;
        if (std::isfinite(e)) finite.push_back(e);
    }
    float quantile = 0.0f;
    bool have_quantile = !finite.empty();
    if (have_quantile) {
        std::sort(finite.begin(), finite.end());
        size_t pos = static_cast<size_t>(
            std::floor(static_cast<double>(cfg_.tau_infeas) * (finite.size() - 1)));
        quantile = finite[pos];
    }
    int count = 0;
    for (std::uint32_t i = 0; i < ds.size(); ++i) {
        auto& rec = ds.mutable_record(i);
        bool infeasible = !std::isfinite(rec.err_a_e) ||
                          (have_quantile && rec.err_a_e > quantile);
        rec.infeasible = infeasible;
        if (infeasible) ++count;
    }
    return count;
}

std::vector<std::pair<StateVec, int>> BridgeEngine::expert_forward_states(const ExpertDataset& ds,
                                                                          std::uint32_t idx,
                                                                          int n) const {
    std::vector<std::pair<StateVec, int>> out;
    if (n <= 0) return out;
    std::unordered_set<StateKey, StateKeyHash> visited;
    const StateVec& start = ds.record(idx).s_e_next;
    visited.insert(make_state_key(start, cfg_.match_tau));
    out.emplace_back(start, 1);
    size_t frontier_begin = 0;
    for (int depth = 1; depth < n; ++depth) {
        size_t frontier_end = out.size();
        for (size_t f = frontier_begin; f < frontier_end; ++f) {
            StateKey k = make_state_key(out[f].first, cfg_.match_tau);
            auto it = starts_at_.find(k);
            if (it == starts_at_.end()) continue;
            for (std::uint32_t j : it->second) {
                const StateVec& next = ds.record(j).s_e_next;
                StateKey nk = make_state_key(next, cfg_.match_tau);
                if (visited.insert(nk).second) out.emplace_back(next, depth + 1);
            }
        }
        frontier_begin = frontier_end;
    }
    return out;
}

std::optional<BridgeInfo> BridgeEngine::find_bridge(const AgentTrajectoryView& traj,
                                                    const ExpertDataset& ds,
                                                    std::uint32_t idx) const {
    auto forward = expert_forward_states(ds, idx, cfg_.expert_depth);
    if (forward.empty()) return std::nullopt;
    std::unordered_set<StateKey, StateKeyHash> targets;
    for (const auto& [state, depth] : forward)
        targets.insert(make_state_key(state, cfg_.match_tau));

    StateKey start = make_state_key(ds.record(idx).s_e, cfg_.match_tau);
    if (traj.edges(start) == nullptr) return std::nullopt;

    struct NodeInfo {
        std::vector<int> seq;   // lexicographically smallest shortest action sequence
        StateVec first_state;   // actual state reached after seq[0]
    };
    std::unordered_set<StateKey, StateKeyHash> visited;
    visited.insert(start);
    std::unordered_map<StateKey, NodeInfo, StateKeyHash> level;
    level[start] = NodeInfo{};

    std::optional<BridgeInfo> best;
    std::vector<int> best_seq;
    for (int depth = 1; depth <= cfg_.agent_depth && !level.empty(); ++depth) {
        std::unordered_map<StateKey, NodeInfo, StateKeyHash> next_level;
        for (const auto& [key, info] : level) {
            const auto* edges = traj.edges(key);
            if (!edges) continue;
            for (const auto& e : *edges) {
                NodeInfo cand;
                cand.seq = info.seq;
                cand.seq.push_back(e.action);
                cand.first_state = depth == 1 ? e.next_state : info.first_state;
                // a hit may land on an already-visited node (only the start
                // can be visited without having ended the search earlier)
                if (targets.count(e.next)) {
                    if (!best || cand.seq < best_seq) {
                        best_seq = cand.seq;
                        best = BridgeInfo{cand.seq.front(), cand.first_state, depth};
                    }
                }
                if (visited.count(e.next)) continue;  // reached at a shorter depth
                auto it = next_level.find(e.next);
                if (it == next_level.end() || cand.seq < it->second.seq)
                    next_level[e.next] = std::move(cand);
            }
        }
        if (best) return best;
        for (const auto& [key, info] : next_level) visited.insert(key);
        level = std::move(next_level);
    }
    return std::nullopt;
}

void BridgeEngine::refresh(ExpertDataset& ds, const AgentTrajectoryView& traj) const {
    mark_infeasible(ds);
    for (std::uint32_t i = 0; i < ds.size(); ++i) {
        auto& rec = ds.mutable_record(i);
        if (!rec.infeasible) continue;
        if (rec.bridge && rec.bridge->l_feas <= 1) continue;  // already minimal
        auto cand = find_bridge(traj, ds, i);
        if (cand && (!rec.bridge || cand->l_feas < rec.bridge->l_feas)) rec.bridge = cand;
    }
}

}  // namespace diiq
