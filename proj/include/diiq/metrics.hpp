#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diiq {

struct EpisodeRow {
    std::int64_t step = 0;
    int episode = 0;
    double episode_return = 0.0;
    double normalized_return = 0.0;
};

struct IntervalRow {
    std::int64_t step = 0;
    double mean_phi = 0.0;
    double mean_err = 0.0;
    double infeasible_fraction = 0.0;
    std::uint32_t bridge_count = 0;
    double mean_bridge_length = 0.0;
    double mean_loss = 0.0;
};

struct EvalRow {
    std::int64_t step = 0;
    double mean_return = 0.0;
    double mean_normalized_return = 0.0;
    double std_return = 0.0;
};

struct MetricsLog {
    std::vector<EpisodeRow> episodes;
    std::vector<IntervalRow> intervals;
    std::vector<EvalRow> evals;
    double final_eval_mean = 0.0;
    double final_eval_std = 0.0;
    double final_eval_norm = 0.0;
    std::int64_t convergence_step = -1;  // first eval step at optimal normalized return

    // CSV bodies are deterministic for a given log; the provenance header
    // carries config hash and seed as comment lines.
    std::string episodes_csv(const std::string& provenance) const;
    std::string intervals_csv(const std::string& provenance) const;
    std::string evals_csv(const std::string& provenance) const;

    void write_files(const std::string& out_dir, const std::string& provenance) const;
};

// "# config_hash=<hex> seed=<n>"
std::string provenance_line(std::uint64_t config_hash, std::uint64_t seed);

// Strips '#' comment lines; used when comparing log bodies across configs.
std::string strip_comments(const std::string& csv);

}  // namespace diiq
