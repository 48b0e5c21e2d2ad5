// Independent reference implementations the unit and acceptance tests check
// the production code against. Everything here favors obviousness over speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "diiq/bridge.hpp"
#include "diiq/distance.hpp"
#include "diiq/expert.hpp"
#include "diiq/nn.hpp"
#include "diiq/rng.hpp"

namespace oracle {

using diiq::Rng;
using diiq::StateVec;

// --- finite differences -----------------------------------------------------

// Central finite differences of the batch loss w.r.t. every parameter, in the
// same flattening order as QNetwork::batch_gradient. The effective step is
// measured from the realized f32 values, so parameter quantization does not
// bias the estimate.
inline std::vector<double> finite_diff_gradient(diiq::QNetwork& net,
                                                const std::vector<diiq::TdEntry>& batch,
                                                float h = 0x1.0p-16f) {
    std::vector<double> grad;
    auto& p = net.mutable_params();
    auto probe = [&](float& param) {
        float orig = param;
        param = orig + h;
        float hi = param;
        double lp = net.batch_loss(batch);
        param = orig - h;
        float lo = param;
        double lm = net.batch_loss(batch);
        param = orig;
        grad.push_back((lp - lm) / (static_cast<double>(hi) - lo));
    };
    for (int l = 0; l < p.num_layers(); ++l) {
        for (auto& w : p.weights[l].data) probe(w);
        for (auto& b : p.biases[l]) probe(b);
    }
    return grad;
}

inline bool gradients_match(const std::vector<double>& analytic, const std::vector<double>& fd,
                            double rtol = 1e-4, double afloor = 1e-7) {
    if (analytic.size() != fd.size()) return false;
    for (size_t i = 0; i < analytic.size(); ++i) {
        double diff = std::abs(analytic[i] - fd[i]);
        double scale = std::max(std::abs(analytic[i]), std::abs(fd[i]));
        if (diff > std::max(afloor, rtol * scale)) return false;
    }
    return true;
}

// Smallest |pre-activation| over all hidden units and batch states; gradient
// checks only make sense away from the ReLU kinks.
inline double min_hidden_preactivation(const diiq::QNetwork& net,
                                       const std::vector<diiq::TdEntry>& batch) {
    const auto& p = net.params();
    double best = 1e30;
    for (const auto& e : batch) {
        std::vector<double> act(e.state.begin(), e.state.end());
        for (int l = 0; l + 1 < p.num_layers(); ++l) {
            const auto& w = p.weights[l];
            std::vector<double> next(w.rows);
            for (int r = 0; r < w.rows; ++r) {
                double acc = p.biases[l][r];
                for (int c = 0; c < w.cols; ++c)
                    acc += static_cast<double>(w.at(r, c)) * act[c];
                best = std::min(best, std::abs(acc));
                next[r] = acc > 0.0 ? acc : 0.0;
            }
            act.swap(next);
        }
    }
    return best;
}

// --- prioritized replay -----------------------------------------------------

// Stratified proportional sampler over an explicit priority array, consuming
// uniforms in the same order as ReplayMemory::sample. Linear prefix scan.
inline std::vector<std::uint32_t> naive_per_sample(const std::vector<double>& raw_priorities,
                                                   std::uint32_t batch, float alpha, Rng& rng) {
    std::vector<double> pa(raw_priorities.size());
    double total = 0.0;
    for (size_t i = 0; i < pa.size(); ++i) {
        pa[i] = std::pow(raw_priorities[i], static_cast<double>(alpha));
        total += pa[i];
    }
    std::vector<std::uint32_t> out;
    double seg = total / batch;
    for (std::uint32_t j = 0; j < batch; ++j) {
        double target = (j + diiq::uniform01(rng)) * seg;
        double acc = 0.0;
        std::uint32_t pick = static_cast<std::uint32_t>(pa.size()) - 1;
        for (std::uint32_t i = 0; i < pa.size(); ++i) {
            acc += pa[i];
            if (target < acc) {
                pick = i;
                break;
            }
        }
        out.push_back(pick);
    }
    return out;
}

// 0.99 chi-square quantile via the Wilson-Hilferty approximation.
inline double chi2_crit99(int df) {
    double z = 2.3263478740408408;
    double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    return df * t * t * t;
}

inline double chi2_stat(const std::vector<std::int64_t>& counts,
                        const std::vector<double>& expected) {
    double s = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        double d = counts[i] - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

// --- k-nearest neighbors ----------------------------------------------------

inline std::vector<std::uint32_t> brute_knn(const diiq::MetricSpec& metric,
                                            const std::vector<StateVec>& points,
                                            const StateVec& query, int k) {
    std::vector<std::pair<float, std::uint32_t>> d;
    for (std::uint32_t i = 0; i < points.size(); ++i)
        d.emplace_back(diiq::state_distance(metric, query, points[i]), i);
    std::stable_sort(d.begin(), d.end(),
                     [](const auto& a, const auto& b) {
                         return a.first < b.first || (a.first == b.first && a.second < b.second);
                     });
    std::vector<std::uint32_t> out;
    for (int i = 0; i < k && i < static_cast<int>(d.size()); ++i) out.push_back(d[i].second);
    return out;
}

// --- bridge search ----------------------------------------------------------

// Exhaustive product search: enumerate the expert forward set by fixpoint
// iteration, then breadth-first over an explicit agent edge list. Returns the
// bridge length only (existence + l_feas are what the oracle pins down).
struct AgentEdgeList {
    // edges as (from_key, action, to_key) over arbitrary integer node keys
    std::vector<std::tuple<std::uint64_t, int, std::uint64_t>> edges;
};

inline std::optional<int> product_bfs_bridge(
    const std::vector<std::uint64_t>& expert_targets,  // keys of expert forward states
    const AgentEdgeList& agent, std::uint64_t start_key, int max_depth) {
    std::set<std::uint64_t> targets(expert_targets.begin(), expert_targets.end());
    std::map<std::uint64_t, std::vector<std::pair<int, std::uint64_t>>> adj;
    for (const auto& [f, a, t] : agent.edges) adj[f].emplace_back(a, t);
    if (!adj.count(start_key)) return std::nullopt;
    std::set<std::uint64_t> visited{start_key};
    std::deque<std::pair<std::uint64_t, int>> q{{start_key, 0}};
    while (!q.empty()) {
        auto [node, depth] = q.front();
        q.pop_front();
        if (depth >= max_depth) continue;
        auto it = adj.find(node);
        if (it == adj.end()) continue;
        for (const auto& [a, next] : it->second) {
            if (targets.count(next)) return depth + 1;
            if (visited.insert(next).second) q.emplace_back(next, depth + 1);
        }
    }
    return std::nullopt;
}

// Expert forward keys by fixpoint: start from the record's next state, expand
// through every record whose initial state has the same key.
inline std::vector<std::uint64_t> expert_forward_keys(
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& expert_key_pairs,
    std::uint64_t start_next_key, int n) {
    std::vector<std::uint64_t> out;
    if (n <= 0) return out;
    std::set<std::uint64_t> visited{start_next_key};
    out.push_back(start_next_key);
    std::vector<std::uint64_t> frontier{start_next_key};
    for (int depth = 1; depth < n; ++depth) {
        std::vector<std::uint64_t> next_frontier;
        for (std::uint64_t x : frontier)
            for (const auto& [s, sn] : expert_key_pairs)
                if (s == x && visited.insert(sn).second) {
                    out.push_back(sn);
                    next_frontier.push_back(sn);
                }
        frontier = std::move(next_frontier);
    }
    return out;
}

// --- misc -------------------------------------------------------------------

inline double quantile_lower(std::vector<float> values, float tau) {
    std::sort(values.begin(), values.end());
    size_t pos = static_cast<size_t>(std::floor(static_cast<double>(tau) * (values.size() - 1)));
    return values[pos];
}

inline StateVec random_unit_state(Rng& rng, int dim) {
    StateVec s(dim);
    for (auto& x : s) x = static_cast<float>(diiq::uniform01(rng));
    return s;
}

inline StateVec random_binary_grid(Rng& rng, int cells, double density) {
    StateVec s(cells, 0.0f);
    for (auto& x : s)
        if (diiq::uniform01(rng) < density) x = 1.0f;
    return s;
}

}  // namespace oracle
