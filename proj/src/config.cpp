#include "diiq/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace diiq {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_pow2(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

}  // namespace

KvMap parse_kv_text(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UserError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw UserError("duplicate config key: " + key);
        kv[key] = value;
    }
    return kv;
}

KvMap parse_kv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UserError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_kv_text(ss.str());
}

std::string canonical_kv_text(const KvMap& kv) {
    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
    return out.str();
}

std::uint64_t config_hash(const KvMap& kv) {
    std::string text = canonical_kv_text(kv);
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

// Typed getters over the kv map; every consumed key is checked off so
// leftovers can be reported as unknown.
struct KvReader {
    KvMap kv;
    std::map<std::string, bool> used;

    explicit KvReader(const KvMap& m) : kv(m) {
        for (const auto& [k, v] : kv) used[k] = false;
    }

    bool has(const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) return false;
        return true;
    }

    std::string str(const std::string& key, const std::string& def) {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        used[key] = true;
        return it->second;
    }

    double num(const std::string& key, double def) {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        used[key] = true;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw UserError("config key '" + key + "' is not a number: " + it->second);
        }
    }

    std::int64_t integer(const std::string& key, std::int64_t def) {
        double v = num(key, static_cast<double>(def));
        if (v != std::floor(v)) throw UserError("config key '" + key + "' must be an integer");
        return static_cast<std::int64_t>(v);
    }

    std::vector<int> int_list(const std::string& key, std::vector<int> def) {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        used[key] = true;
        std::vector<int> out;
        std::istringstream in(it->second);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            out.push_back(std::stoi(tok));
        }
        if (out.empty()) throw UserError("config key '" + key + "' needs a comma list");
        return out;
    }

    void check_fully_used() const {
        for (const auto& [k, u] : used)
            if (!u) throw UserError("unknown config key: " + k);
    }
};

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || base_dir.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

RunConfig run_config_from_kv(const KvMap& kv, const std::string& base_dir) {
    KvReader r(kv);
    RunConfig c;
    c.raw = kv;

    c.algorithm = r.str("algorithm", c.algorithm);

    c.env.id = r.str("env", "maze");
    std::string layout_path = r.str("layout", "");
    if (layout_path.empty()) throw UserError("config needs a 'layout' file");
    c.env.layout = MazeLayout::load_file(resolve(base_dir, layout_path));
    c.env.agent_pattern = make_action_pattern(
        r.str("agent_pattern", c.env.id == "maze" ? "standard" : "diagonal"));
    c.env.expert_pattern = make_action_pattern(
        r.str("expert_pattern", c.env.id == "maze" ? "standard" : "orthogonal"));
    c.env.max_episode_steps = static_cast<int>(r.integer("max_episode_steps", 300));
    c.env.step_penalty = static_cast<float>(r.num("step_penalty", -1.0));
    c.env.goal_reward = static_cast<float>(r.num("goal_reward", 100.0));
    c.env.sticky_prob = static_cast<float>(r.num("sticky_prob", 0.0));
    c.env.grid_obs = static_cast<int>(r.integer("grid_obs", 0));
    if (c.env.grid_obs != 0 && c.env.grid_obs != 1 && c.env.grid_obs != 3)
        throw UserError("grid_obs must be 0 (coords), 1 (agent channel) or 3 (full channels)");
    c.env.dt = static_cast<float>(r.num("dt", 0.1));
    c.env.friction = static_cast<float>(r.num("friction", 0.1));
    c.env.v_max = static_cast<float>(r.num("v_max", 1.0));
    c.env.goal_tolerance = static_cast<float>(r.num("goal_tolerance", 0.5));

    c.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
    c.env.sticky_seed = stream_seed(c.seed, 17);
    c.train_steps = r.integer("train_steps", c.train_steps);
    c.buffer_size = static_cast<std::uint32_t>(r.integer("buffer_size", c.buffer_size));
    c.batch_size = static_cast<int>(r.integer("batch_size", c.batch_size));
    c.lr = static_cast<float>(r.num("lr", c.lr));
    c.eps_start = static_cast<float>(r.num("eps_start", c.eps_start));
    c.eps_end = static_cast<float>(r.num("eps_end", c.eps_end));
    c.eps_decay_steps = r.integer("eps_decay_steps", c.eps_decay_steps);
    c.warmup_steps = r.integer("warmup_steps", c.warmup_steps);
    c.gamma = static_cast<float>(r.num("gamma", c.gamma));
    c.learn_every = static_cast<int>(r.integer("learn_every", c.learn_every));
    c.target_sync_every = static_cast<int>(r.integer("target_sync_every", c.target_sync_every));
    c.per_alpha = static_cast<float>(r.num("per_alpha", c.per_alpha));
    c.per_beta_start = static_cast<float>(r.num("per_beta_start", c.per_beta_start));
    c.per_beta_end = static_cast<float>(r.num("per_beta_end", c.per_beta_end));
    c.per_beta_steps = r.integer("per_beta_steps", c.per_beta_steps);

    c.tau_similar = static_cast<float>(r.num("tau_similar", c.tau_similar));
    c.c_max = static_cast<int>(r.integer("c_max", c.c_max));
    c.k_knn = static_cast<int>(r.integer("k_knn", c.k_knn));
    c.dataset_path = resolve(base_dir, r.str("dataset", ""));
    c.confidence_beta = static_cast<float>(r.num("confidence_beta", c.confidence_beta));
    c.chain_epsilon = static_cast<float>(r.num("chain_epsilon", c.chain_epsilon));
    c.phi_override = static_cast<float>(r.num("phi_override", c.phi_override));

    c.bridge.tau_infeas = static_cast<float>(r.num("tau_infeas", c.bridge.tau_infeas));
    c.bridge.agent_depth = static_cast<int>(r.integer("bridge_agent_depth", c.bridge.agent_depth));
    c.bridge.expert_depth =
        static_cast<int>(r.integer("bridge_expert_depth", c.bridge.expert_depth));
    c.bridge.update_interval =
        static_cast<int>(r.integer("bridge_update_interval", c.bridge.update_interval));
    c.bridge.match_tau = static_cast<float>(r.num("match_tau", c.bridge.match_tau));

    c.hidden_layers = r.int_list("hidden_layers", c.hidden_layers);
    c.eval_interval = r.integer("eval_interval", c.eval_interval);
    c.eval_episodes = static_cast<int>(r.integer("eval_episodes", c.eval_episodes));
    c.eval_eps = static_cast<float>(r.num("eval_eps", c.eval_eps));
    c.log_interval = r.integer("log_interval", c.log_interval);

    // metric geometry follows the observation layout
    std::string metric_name = r.str("metric", "euclidean");
    c.metric.kind = metric_kind_from_string(metric_name);
    int maze_dim = c.env.grid_obs == 0 ? 2
                                       : c.env.grid_obs * c.env.layout.height * c.env.layout.width;
    if (c.metric.kind == MetricKind::EuclideanNormalized) {
        c.metric.state_dim = c.env.id == "maze" ? maze_dim : 4;
    } else {
        if (c.env.id != "maze" || c.env.grid_obs == 0)
            throw UserError("hamming metrics require the maze grid observation mode");
        c.metric.channels = c.env.grid_obs;
        c.metric.height = c.env.layout.height;
        c.metric.width = c.env.layout.width;
        if (c.metric.kind == MetricKind::HammingStatic)
            c.metric.static_channel_weights.assign(c.env.grid_obs, 1.0f);
    }
    c.metric.w_base = static_cast<float>(r.num("w_base", c.metric.w_base));
    c.metric.lambda = static_cast<float>(r.num("lambda", c.metric.lambda));
    c.metric.rho_max = static_cast<float>(r.num("rho_max", c.metric.rho_max));

    r.check_fully_used();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    KvMap kv = parse_kv_file(path);
    std::string dir = std::filesystem::path(path).parent_path().string();
    return run_config_from_kv(kv, dir);
}

void RunConfig::validate() const {
    if (algorithm != "dqn" && algorithm != "diiqn" && algorithm != "ha-diiqn")
        throw UserError("algorithm must be dqn, diiqn or ha-diiqn");
    try {
        env.validate();
        metric.validate();
        bridge.validate();
    } catch (const std::exception& e) {
        throw UserError(e.what());
    }
    if (train_steps < 0) throw UserError("train_steps must be >= 0");
    if (!is_pow2(buffer_size)) throw UserError("buffer_size must be a power of two");
    if (batch_size <= 0 || static_cast<std::uint32_t>(batch_size) > buffer_size)
        throw UserError("batch_size must be in [1, buffer_size]");
    if (lr <= 0.0f) throw UserError("lr must be > 0");
    if (!(gamma > 0.0f && gamma < 1.0f)) throw UserError("gamma must be in (0,1)");
    if (eps_start < eps_end || eps_start > 1.0f || eps_end < 0.0f)
        throw UserError("epsilon schedule must decay within [0,1]");
    if (per_beta_start > per_beta_end) throw UserError("per_beta schedule must be nondecreasing");
    if (!(per_alpha >= 0.0f)) throw UserError("per_alpha must be >= 0");
    if (learn_every < 1 || target_sync_every < 1) throw UserError("frequencies must be >= 1");
    if (!(tau_similar > 0.0f && tau_similar <= 1.0f)) throw UserError("tau_similar in (0,1]");
    if (c_max <= 0) throw UserError("c_max must be > 0");
    if (k_knn < 1) throw UserError("k_knn must be >= 1");
    if (confidence_beta <= 0.0f) throw UserError("confidence_beta must be > 0");
    if (hidden_layers.empty()) throw UserError("hidden_layers must be nonempty");
    for (int h : hidden_layers)
        if (h <= 0) throw UserError("hidden layer sizes must be positive");
    if (eval_interval < 1 || log_interval < 1) throw UserError("intervals must be >= 1");
    if (eval_episodes < 1) throw UserError("eval_episodes must be >= 1");
    if (eval_eps < 0.0f || eval_eps > 1.0f) throw UserError("eval_eps must be in [0,1]");
    if (warmup_steps < 0) throw UserError("warmup_steps must be >= 0");
    if (imitation() && metric.kind == MetricKind::EuclideanNormalized) {
        int want = env.id == "maze"
                       ? (env.grid_obs == 0 ? 2 : env.grid_obs * env.layout.height * env.layout.width)
                       : 4;
        if (metric.state_dim != want) throw UserError("metric dimension does not match env");
    }
}

}  // namespace diiq
