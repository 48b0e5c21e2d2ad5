#include "diiq/learner.hpp"

#include <algorithm>
#include <cmath>

namespace diiq {

int select_action(const QOutput& q, float eps, Rng& rng) {
    if (eps < 0.0f || eps > 1.0f) throw std::invalid_argument("eps must be in [0,1]");
    if (uniform01(rng) < eps) return uniform_int(rng, static_cast<int>(q.q_values.size()));
    return argmax_action(q);
}

float ddqn_target(float r, bool done, const StateVec& s_next, const QNetwork& main,
                  const QNetwork& target, float gamma) {
    if (done || gamma == 0.0f) return r;
    int a_star = argmax_action(main.forward(s_next));
    return r + gamma * target.forward(s_next).q_values[a_star];
}

namespace {

std::vector<int> network_dims(const RunConfig& cfg, int state_dim, int actions) {
    std::vector<int> dims;
    dims.push_back(state_dim);
    for (int h : cfg.hidden_layers) dims.push_back(h);
    dims.push_back(actions);
    return dims;
}

QNetwork build_net(const RunConfig& cfg, int state_dim, int actions) {
    Rng rng_init(stream_seed(cfg.seed, 1));
    return QNetwork(network_dims(cfg, state_dim, actions), rng_init);
}

}  // namespace

Learner::Learner(const RunConfig& cfg)
    : cfg_(cfg),
      env_(make_env(cfg.env, Role::Agent)),
      net_(build_net(cfg, env_->state_dim(), env_->action_count())),
      target_(net_),
      replay_(cfg.buffer_size),
      traj_(cfg.bridge.match_tau),
      rng_action_(stream_seed(cfg.seed, 2)),
      rng_replay_(stream_seed(cfg.seed, 3)),
      rng_expert_(stream_seed(cfg.seed, 4)) {
    cfg_.validate();
    adam_.lr = cfg_.lr;
    if (cfg_.imitation() && !cfg_.dataset_path.empty()) {
        Rng rng_ds(stream_seed(cfg_.seed, 5));
        dataset_.emplace(ExpertDataset::load_file(cfg_.dataset_path, env_->action_count(),
                                                  cfg_.c_max, rng_ds, cfg_.chain_epsilon));
        if (dataset_->metric().total_dim() != env_->state_dim())
            throw UserError("expert dataset state dimension does not match environment");
    }
    if (cfg_.heterogeneous_mode() && dataset_)
        bridge_engine_.emplace(cfg_.bridge, *dataset_);
}

Learner::SampleComputation Learner::compute_sample(const RunConfig& cfg, const QNetwork& net,
                                                   const QNetwork& target, ExpertDataset* dataset,
                                                   const AugmentedExperience& e, float is_w) {
    SampleComputation out;
    float y_a = ddqn_target(e.r, e.done, e.s_a_next, net, target, cfg.gamma);
    out.td_error = y_a - net.forward(e.s_a).q_values[e.a_a];

    if (dataset && e.expert_ref) {
        ExpertRecord& rec = dataset->mutable_record(*e.expert_ref);
        if (cfg.heterogeneous_mode() && rec.infeasible) {
            if (rec.bridge) {
                dataset->increment_counter(*e.expert_ref);
                float y_e = e.done ? e.r
                                   : ddqn_target(e.r, false, rec.bridge->s_feas, net, target,
                                                 cfg.gamma);
                QOutput q_se = net.forward(rec.s_e);
                float dq = delta_q(q_se, rec.bridge->a_feas, e.a_a, cfg.confidence_beta);
                float w = discount_weight(rec.c_s_e, cfg.c_max);
                out.phi = phi_heterogeneous(dq, w);
                if (cfg.phi_override >= 0.0f) out.phi = cfg.phi_override;
                if (is_w * out.phi > 0.0f)
                    out.entries.push_back(
                        TdEntry{rec.s_e, rec.bridge->a_feas, y_e, is_w * out.phi});
                out.expert_used = true;
            }
            // no bridge: the sample trains as agent-only
        } else {
            dataset->increment_counter(*e.expert_ref);
            float y_e = e.done ? e.r
                               : ddqn_target(e.r, false, rec.s_e_next, net, target, cfg.gamma);
            QOutput q_se = net.forward(rec.s_e);
            float dq = delta_q(q_se, rec.a_e, e.a_a, cfg.confidence_beta);
            float w = discount_weight(rec.c_s_e, cfg.c_max);
            float eps_rel = dataset->reliability(*e.expert_ref);
            out.phi = phi_homogeneous(dq, w, eps_rel);
            if (cfg.phi_override >= 0.0f) out.phi = cfg.phi_override;
            if (is_w * out.phi > 0.0f)
                out.entries.push_back(TdEntry{rec.s_e, rec.a_e, y_e, is_w * out.phi});
            out.expert_used = true;
        }
    }
    float agent_w = out.expert_used ? is_w * (1.0f - out.phi) : is_w;
    if (agent_w > 0.0f) out.entries.push_back(TdEntry{e.s_a, e.a_a, y_a, agent_w});
    return out;
}

double Learner::train_step() {
    float beta = linear_schedule(cfg_.per_beta_start, cfg_.per_beta_end, cfg_.per_beta_steps,
                                 std::max<std::int64_t>(step_ - cfg_.warmup_steps, 0));
    auto batch = replay_.sample(cfg_.batch_size, cfg_.per_alpha, beta, rng_replay_);

    std::vector<TdEntry> entries;
    entries.reserve(batch.size() * 2);
    std::vector<std::uint32_t> indices(batch.size());
    std::vector<float> td_errors(batch.size());

    for (size_t i = 0; i < batch.size(); ++i) {
        const AugmentedExperience& e = *batch[i].exp;
        indices[i] = batch[i].index;
        SampleComputation sc = compute_sample(cfg_, net_, target_, dataset_ ? &*dataset_ : nullptr,
                                              e, batch[i].is_weight);
        td_errors[i] = sc.td_error;
        for (auto& en : sc.entries) entries.push_back(std::move(en));
        interval_phi_sum_ += sc.expert_used ? sc.phi : 0.0f;
        ++interval_sample_count_;
    }

    // weighted_td_step divides by the entry count; rescale so the effective
    // divisor is the sample count
    if (entries.size() != batch.size()) {
        float scale = static_cast<float>(entries.size()) / static_cast<float>(batch.size());
        for (auto& en : entries) en.sample_weight *= scale;
    }
    double loss = 0.0;
    if (!entries.empty()) loss = net_.weighted_td_step(entries, adam_);
    replay_.update_priorities(indices, td_errors);
    interval_loss_sum_ += loss;
    ++interval_train_count_;
    return loss;
}

Learner::EvalResult Learner::evaluate(int episodes, float eps, std::uint64_t eval_index) const {
    EvalResult res;
    auto env = make_env(cfg_.env, Role::Agent);
    Rng rng(stream_seed(cfg_.seed, 100 + eval_index));
    std::vector<double> returns;
    for (int ep = 0; ep < episodes; ++ep) {
        StateVec s = env->reset();
        double ret = 0.0;
        bool done = false;
        while (!done) {
            int a = select_action(net_.forward(s), eps, rng);
            StepResult sr = env->step(a);
            ret += sr.reward;
            done = sr.done;
            s = std::move(sr.state);
        }
        returns.push_back(ret);
    }
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double var = 0.0;
    for (double r : returns) var += (r - mean) * (r - mean);
    var /= static_cast<double>(returns.size());
    res.mean_return = mean;
    res.std_return = std::sqrt(var);
    res.mean_normalized = env_->normalized_return(static_cast<float>(mean));
    return res;
}

void Learner::maintain_adjacency_on_push(const AugmentedExperience& exp,
                                         const std::optional<AugmentedExperience>& evicted) {
    if (!cfg_.heterogeneous_mode()) return;
    traj_.add_transition(exp.s_a, exp.a_a, exp.s_a_next);
    if (evicted) traj_.remove_transition(evicted->s_a, evicted->a_a, evicted->s_a_next);
}

MetricsLog Learner::run() {
    MetricsLog log;
    if (cfg_.train_steps == 0) return log;

    int knn_wide = std::max(cfg_.k_knn, 50);
    StateVec s = env_->reset();
    double ep_return = 0.0;
    int episode = 0;
    std::uint64_t eval_index = 0;
    std::vector<double> eval_window;

    auto run_eval = [&]() -> bool {
        EvalResult res = evaluate(cfg_.eval_episodes, cfg_.eval_eps, eval_index++);
        EvalRow row{step_, res.mean_return, res.mean_normalized, res.std_return};
        log.evals.push_back(row);
        if (log.convergence_step < 0 && res.mean_normalized >= 0.999) log.convergence_step = step_;
        if (stop_at_eval_return) {
            eval_window.push_back(res.mean_return);
            if (eval_window.size() > 3) eval_window.erase(eval_window.begin());
            double avg = 0.0;
            for (double v : eval_window) avg += v;
            avg /= static_cast<double>(eval_window.size());
            if (avg >= *stop_at_eval_return) return true;
        }
        return false;
    };

    bool stop = false;
    for (step_ = 1; step_ <= cfg_.train_steps && !stop; ++step_) {
        float eps = step_ <= cfg_.warmup_steps
                        ? 1.0f
                        : linear_schedule(cfg_.eps_start, cfg_.eps_end, cfg_.eps_decay_steps,
                                          step_ - cfg_.warmup_steps - 1);
        int a = select_action(net_.forward(s), eps, rng_action_);
        StepResult sr = env_->step(a);

        std::optional<std::uint32_t> ref;
        if (dataset_ && !dataset_->empty()) {
            std::vector<std::uint32_t> candidates = dataset_->knn(s, knn_wide);
            dataset_->infer_actions(s, a, sr.state, candidates);
            if (trace_hook) trace_hook(StepTrace{s, a, sr.state, candidates});
            ref = dataset_->sample_similar(s, cfg_.k_knn, cfg_.tau_similar, rng_expert_);
        } else if (trace_hook) {
            trace_hook(StepTrace{s, a, sr.state, {}});
        }

        // timeout truncations keep their bootstrap term; only true terminals
        // (goal reached) store done for the targets
        AugmentedExperience exp{s, a, sr.reward, sr.state, sr.done && !sr.truncated, ref};
        maintain_adjacency_on_push(exp, replay_.push(std::move(exp)));

        ep_return += sr.reward;
        if (sr.done) {
            ++episode;
            log.episodes.push_back(EpisodeRow{
                step_, episode, ep_return,
                static_cast<double>(env_->normalized_return(static_cast<float>(ep_return)))});
            ep_return = 0.0;
            s = env_->reset();
        } else {
            s = std::move(sr.state);
        }

        if (step_ > cfg_.warmup_steps && step_ % cfg_.learn_every == 0 &&
            replay_.size() >= static_cast<std::uint32_t>(cfg_.batch_size))
            train_step();

        if (step_ % cfg_.target_sync_every == 0) sync_target(net_, target_);

        if (bridge_engine_ && step_ % cfg_.bridge.update_interval == 0)
            bridge_engine_->refresh(*dataset_, traj_);

        if (step_ % cfg_.log_interval == 0) {
            IntervalRow row;
            row.step = step_;
            row.mean_phi = interval_sample_count_ > 0
                               ? interval_phi_sum_ / static_cast<double>(interval_sample_count_)
                               : 0.0;
            row.mean_loss = interval_train_count_ > 0
                                ? interval_loss_sum_ / static_cast<double>(interval_train_count_)
                                : 0.0;
            ExpertDataset::Stats st;
            if (dataset_) st = dataset_->stats();
            row.mean_err = st.mean_err;
            row.infeasible_fraction = st.infeasible_fraction;
            row.bridge_count = st.bridge_count;
            row.mean_bridge_length = st.mean_bridge_length;
            log.intervals.push_back(row);
            interval_phi_sum_ = 0.0;
            interval_sample_count_ = 0;
            interval_loss_sum_ = 0.0;
            interval_train_count_ = 0;
        }

        if (step_ == cfg_.warmup_steps ||
            (step_ > cfg_.warmup_steps &&
             (step_ - cfg_.warmup_steps) % cfg_.eval_interval == 0)) {
            if (run_eval()) {
                stop = true;
                stopped_at_step = step_;
            }
        }
    }

    if (!stop) {
        step_ = cfg_.train_steps;
        if (log.evals.empty() || log.evals.back().step != step_) run_eval();
    }
    const EvalRow& last = log.evals.back();
    log.final_eval_mean = last.mean_return;
    log.final_eval_std = last.std_return;
    log.final_eval_norm = last.mean_normalized_return;
    return log;
}

}  // namespace diiq
