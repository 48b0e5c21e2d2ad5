#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "diiq/bridge.hpp"
#include "diiq/config.hpp"
#include "diiq/confidence.hpp"
#include "diiq/expert.hpp"
#include "diiq/metrics.hpp"
#include "diiq/nn.hpp"
#include "diiq/replay.hpp"

namespace diiq {

// Epsilon-greedy over a Q vector.
int select_action(const QOutput& q, float eps, Rng& rng);

// r when terminal, else r + gamma * Q(s', argmax_a Q(s',a; main); target).
float ddqn_target(float r, bool done, const StateVec& s_next, const QNetwork& main,
                  const QNetwork& target, float gamma);

// Drives one training run: baseline DQN, DIIQN, or HA-DIIQN depending on the
// config. Fully reproducible from the config seed.
class Learner {
  public:
    explicit Learner(const RunConfig& cfg);

    MetricsLog run();

    const QNetwork& network() const { return net_; }
    const ExpertDataset* dataset() const { return dataset_ ? &*dataset_ : nullptr; }

    // Test hook: called once per environment step with the executed
    // transition and the candidate records passed to action inference.
    struct StepTrace {
        StateVec s;
        int action = 0;
        StateVec s_next;
        std::vector<std::uint32_t> candidates;
    };
    std::function<void(const StepTrace&)> trace_hook;

    // Early-stop for expert training: stop once the moving average (window 3)
    // of evaluation returns reaches this value.
    std::optional<float> stop_at_eval_return;
    std::int64_t stopped_at_step = -1;

    // One training step on a sampled minibatch; exposed for white-box tests.
    double train_step();

    // Per-sample loss construction: agent TD head plus, when an expert record
    // is attached, the confidence-weighted expert head (bridged in HA mode).
    // Mutates the record's counter exactly as a real training step would.
    struct SampleComputation {
        std::vector<TdEntry> entries;
        float phi = 0.0f;
        bool expert_used = false;
        float td_error = 0.0f;  // agent TD error, feeds the replay priorities
    };
    static SampleComputation compute_sample(const RunConfig& cfg, const QNetwork& net,
                                            const QNetwork& target, ExpertDataset* dataset,
                                            const AugmentedExperience& e, float is_w);

    struct EvalResult {
        double mean_return = 0.0;
        double std_return = 0.0;
        double mean_normalized = 0.0;
    };
    EvalResult evaluate(int episodes, float eps, std::uint64_t eval_index) const;

  private:
    void maintain_adjacency_on_push(const AugmentedExperience& exp,
                                    const std::optional<AugmentedExperience>& evicted);

    RunConfig cfg_;
    std::unique_ptr<Env> env_;
    QNetwork net_;
    QNetwork target_;
    ReplayMemory replay_;
    std::optional<ExpertDataset> dataset_;
    std::optional<BridgeEngine> bridge_engine_;
    AgentTrajectoryView traj_;
    AdamConfig adam_;

    Rng rng_action_;
    Rng rng_replay_;
    Rng rng_expert_;

    std::int64_t step_ = 0;
    double interval_phi_sum_ = 0.0;
    std::int64_t interval_sample_count_ = 0;
    double interval_loss_sum_ = 0.0;
    std::int64_t interval_train_count_ = 0;
};

}  // namespace diiq
