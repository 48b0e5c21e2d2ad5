#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "diiq/bridge.hpp"
#include "diiq/distance.hpp"
#include "diiq/env.hpp"

namespace diiq {

// Errors caused by user input (bad config, missing files, bad CLI usage).
// The CLI maps these to exit code 1; everything else is internal (2).
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using KvMap = std::map<std::string, std::string>;

// "key = value" lines, '#' comments, blank lines ignored. Duplicate keys are
// rejected.
KvMap parse_kv_text(const std::string& text);
KvMap parse_kv_file(const std::string& path);

// Sorted "key=value" lines; the basis of the config hash.
std::string canonical_kv_text(const KvMap& kv);
std::uint64_t config_hash(const KvMap& kv);

// Everything one training run needs. Defaults follow the maze-scale setup.
struct RunConfig {
    std::string algorithm = "dqn";  // dqn | diiqn | ha-diiqn
    EnvSpec env;
    MetricSpec metric;

    std::uint64_t seed = 1;
    std::int64_t train_steps = 60000;
    std::uint32_t buffer_size = 16384;  // must be a power of two
    int batch_size = 32;
    float lr = 6.3e-4f;
    float eps_start = 1.0f;
    float eps_end = 0.05f;
    std::int64_t eps_decay_steps = 20000;
    std::int64_t warmup_steps = 2000;
    float gamma = 0.98f;
    int learn_every = 1;
    int target_sync_every = 1000;
    float per_alpha = 0.6f;
    float per_beta_start = 0.4f;
    float per_beta_end = 1.0f;
    std::int64_t per_beta_steps = 40000;

    float tau_similar = 0.96f;
    int c_max = 500;
    int k_knn = 5;
    std::string dataset_path;  // empty: train without expert data
    float confidence_beta = 1.0f;
    float chain_epsilon = 0.0f;
    float phi_override = -1.0f;  // >= 0 forces phi to that value (diagnostics)

    BridgeConfig bridge;

    std::vector<int> hidden_layers = {64, 64};
    std::int64_t eval_interval = 2000;
    int eval_episodes = 1;
    float eval_eps = 0.0f;
    std::int64_t log_interval = 1000;

    KvMap raw;  // the key-value map this config was built from

    bool imitation() const { return algorithm != "dqn"; }
    bool heterogeneous_mode() const { return algorithm == "ha-diiqn"; }
    void validate() const;  // throws UserError
    std::uint64_t hash() const { return config_hash(raw); }
};

// Builds a RunConfig from a key-value map. Unknown keys are hard errors.
// Relative paths (layout, dataset) resolve against base_dir when given.
RunConfig run_config_from_kv(const KvMap& kv, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

}  // namespace diiq
