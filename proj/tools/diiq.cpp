// Command-line front end: expert training, dataset construction, training
// runs, checkpoint evaluation and parameter sweeps.

#include <CLI11.hpp>
#include <cstdio>
#include <unistd.h>

#include "diiq/harness.hpp"
#include "diiq/learner.hpp"

namespace {

std::string self_exe_path() {
    char buf[4096];
    ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return "diiq";
    buf[n] = '\0';
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep implicit imitation RL toolkit (DIIQN / HA-DIIQN)"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "run one training run from a config file");
    std::string train_cfg, train_out = "run_out";
    std::int64_t train_seed = -1;
    train->add_option("--config", train_cfg, "run config file")->required();
    train->add_option("--out", train_out, "output directory");
    train->add_option("--seed", train_seed, "override the config seed");

    // train-expert
    auto* texp = app.add_subcommand("train-expert",
                                    "train a DQN expert to a target return and record episodes");
    std::string texp_cfg, texp_out;
    double texp_target = 0.0;
    int texp_episodes = 2;
    texp->add_option("--config", texp_cfg, "run config file")->required();
    texp->add_option("--target-return", texp_target, "stop once the moving average reaches this")
        ->required();
    texp->add_option("--episodes", texp_episodes, "episodes to record");
    texp->add_option("--out-dataset", texp_out, "output dataset file")->required();

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "merge expert dataset files");
    std::vector<std::string> build_inputs;
    std::string build_out;
    build->add_option("--out", build_out, "output dataset file")->required();
    build->add_option("inputs", build_inputs, "input dataset files")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint greedily");
    std::string eval_cfg, eval_ckpt;
    int eval_episodes = 5;
    double eval_eps = 0.01;
    eval->add_option("--config", eval_cfg, "run config file (environment source)")->required();
    eval->add_option("--checkpoint", eval_ckpt, "network checkpoint")->required();
    eval->add_option("--episodes", eval_episodes, "evaluation episodes");
    eval->add_option("--eps", eval_eps, "evaluation epsilon");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a variant x seed experiment plan");
    std::string sweep_plan;
    int sweep_jobs = 0;
    sweep->add_option("--plan", sweep_plan, "plan file")->required();
    sweep->add_option("--jobs", sweep_jobs, "max parallel worker processes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            diiq::KvMap kv = diiq::parse_kv_file(train_cfg);
            if (train_seed >= 0) kv["seed"] = std::to_string(train_seed);
            std::string dir = std::filesystem::path(train_cfg).parent_path().string();
            diiq::RunConfig cfg = diiq::run_config_from_kv(kv, dir);
            diiq::MetricsLog log = diiq::cmd_train(cfg, train_out);
            std::printf("algorithm=%s seed=%llu episodes=%zu final_return=%.4f "
                        "final_norm=%.4f convergence_step=%lld\n",
                        cfg.algorithm.c_str(), static_cast<unsigned long long>(cfg.seed),
                        log.episodes.size(), log.final_eval_mean, log.final_eval_norm,
                        static_cast<long long>(log.convergence_step));
        } else if (*texp) {
            diiq::RunConfig cfg = diiq::load_run_config(texp_cfg);
            auto res = diiq::cmd_train_expert(cfg, static_cast<float>(texp_target), texp_episodes,
                                              texp_out);
            std::printf("expert ready: stopped_at_step=%lld achieved_return=%.4f "
                        "episodes=%d transitions=%zu -> %s\n",
                        static_cast<long long>(res.stopped_at_step), res.achieved_return,
                        res.episodes_recorded, res.transitions, texp_out.c_str());
        } else if (*build) {
            std::size_t n = diiq::cmd_build_dataset(build_inputs, build_out);
            std::printf("merged %zu files, %zu transitions -> %s\n", build_inputs.size(), n,
                        build_out.c_str());
        } else if (*eval) {
            diiq::RunConfig cfg = diiq::load_run_config(eval_cfg);
            auto res = diiq::cmd_eval(cfg, eval_ckpt, eval_episodes,
                                      static_cast<float>(eval_eps));
            std::printf("eval: mean_return=%.4f std=%.4f normalized=%.4f over %d episodes\n",
                        res.mean_return, res.std_return, res.mean_normalized, eval_episodes);
        } else if (*sweep) {
            diiq::SweepPlan plan = diiq::SweepPlan::parse_file(sweep_plan);
            if (sweep_jobs > 0) plan.jobs = sweep_jobs;
            auto results = diiq::cmd_sweep(plan, self_exe_path());
            int ok = 0, failed = 0;
            for (const auto& r : results) (r.ok ? ok : failed)++;
            std::printf("sweep done: %d cells ok, %d failed; report at %s/report.csv\n", ok,
                        failed, plan.out_dir.c_str());
            if (ok == 0) return 2;
        }
    } catch (const diiq::UserError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 0;
}
