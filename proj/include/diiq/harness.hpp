#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diiq/config.hpp"
#include "diiq/metrics.hpp"

namespace diiq {

// Runs one training run and writes episodes/intervals/evals CSVs, a
// summary.json and the final network checkpoint into out_dir.
MetricsLog cmd_train(const RunConfig& cfg, const std::string& out_dir);

struct TrainExpertResult {
    std::int64_t stopped_at_step = -1;
    double achieved_return = 0.0;
    int episodes_recorded = 0;
    std::size_t transitions = 0;
};

// Trains a DQN policy under the expert action pattern until the moving
// average of evaluation returns reaches target_return, then records
// `episodes` greedy episodes (with the config's eval_eps exploration) as
// state-only transitions. Throws UserError when the step budget runs out.
TrainExpertResult cmd_train_expert(const RunConfig& cfg, float target_return, int episodes,
                                   const std::string& dataset_out);

// Concatenates dataset files; record expert ids are re-assigned per input
// file. All inputs must share the metric geometry.
std::size_t cmd_build_dataset(const std::vector<std::string>& inputs, const std::string& output);

struct EvalSummary {
    double mean_return = 0.0;
    double std_return = 0.0;
    double mean_normalized = 0.0;
};

EvalSummary cmd_eval(const RunConfig& cfg, const std::string& checkpoint, int episodes, float eps);

struct SweepPlan {
    std::string base_config_path;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    int jobs = 1;
    std::vector<std::pair<std::string, KvMap>> variants;  // id -> overrides

    static SweepPlan parse_file(const std::string& path);
};

struct SweepCellResult {
    std::string variant;
    std::uint64_t seed = 0;
    bool ok = false;
    double final_return = 0.0;
    double final_norm = 0.0;
    std::int64_t convergence_step = -1;
};

// Runs every variant x seed cell in an independent worker process (the diiq
// binary re-invoked with `train`), aggregates mean/std of final returns and
// writes report.csv plus per-variant phi-curve CSVs.
std::vector<SweepCellResult> cmd_sweep(const SweepPlan& plan, const std::string& self_exe);

// Writes summary.json for one finished run.
void write_summary_json(const std::string& path, const RunConfig& cfg, const MetricsLog& log,
                        std::int64_t stopped_at_step);

}  // namespace diiq
