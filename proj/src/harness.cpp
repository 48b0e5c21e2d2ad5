#include "diiq/harness.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "diiq/learner.hpp"

namespace diiq {

namespace fs = std::filesystem;
using nlohmann::json;

MetricsLog cmd_train(const RunConfig& cfg, const std::string& out_dir) {
    Learner learner(cfg);
    MetricsLog log = learner.run();
    fs::create_directories(out_dir);
    log.write_files(out_dir, provenance_line(cfg.hash(), cfg.seed));
    learner.network().save(out_dir + "/net.ckpt");
    write_summary_json(out_dir + "/summary.json", cfg, log, learner.stopped_at_step);
    return log;
}

TrainExpertResult cmd_train_expert(const RunConfig& cfg, float target_return, int episodes,
                                   const std::string& dataset_out) {
    if (episodes < 1) throw UserError("episodes_to_record must be >= 1");
    RunConfig expert_cfg = cfg;
    expert_cfg.algorithm = "dqn";
    expert_cfg.dataset_path.clear();
    expert_cfg.env.agent_pattern = cfg.env.expert_pattern;  // the expert acts with its own set

    Learner learner(expert_cfg);
    learner.stop_at_eval_return = target_return;
    MetricsLog log = learner.run();
    TrainExpertResult res;
    res.stopped_at_step = learner.stopped_at_step;
    res.achieved_return = log.final_eval_mean;
    if (learner.stopped_at_step < 0) {
        std::ostringstream msg;
        msg << "expert training did not reach target return " << target_return << " within "
            << expert_cfg.train_steps << " steps (best final evaluation: " << log.final_eval_mean
            << ")";
        throw UserError(msg.str());
    }

    // record greedy episodes as state-only transitions
    RawDataset raw;
    raw.metric = expert_cfg.metric;
    auto env = make_env(expert_cfg.env, Role::Agent);
    Rng rng(stream_seed(expert_cfg.seed, 7000));
    const QNetwork& net = learner.network();
    for (int ep = 0; ep < episodes; ++ep) {
        StateVec s = env->reset();
        bool done = false;
        while (!done) {
            int a = select_action(net.forward(s), expert_cfg.eval_eps, rng);
            StepResult sr = env->step(a);
            raw.transitions.emplace_back(s, sr.state);
            raw.expert_ids.push_back(0);
            done = sr.done;
            s = std::move(sr.state);
        }
        ++res.episodes_recorded;
    }
    res.transitions = raw.transitions.size();
    write_dataset_file(dataset_out, raw);
    return res;
}

std::size_t cmd_build_dataset(const std::vector<std::string>& inputs, const std::string& output) {
    if (inputs.empty()) throw UserError("build-dataset needs at least one input file");
    RawDataset merged;
    for (size_t i = 0; i < inputs.size(); ++i) {
        RawDataset part;
        try {
            part = read_dataset_file(inputs[i]);
        } catch (const std::exception& e) {
            throw UserError(e.what());
        }
        if (i == 0) {
            merged.metric = part.metric;
        } else if (part.metric.kind != merged.metric.kind ||
                   part.metric.total_dim() != merged.metric.total_dim()) {
            throw UserError("dataset " + inputs[i] + " has mismatched metric/state geometry");
        }
        for (auto& t : part.transitions) merged.transitions.push_back(std::move(t));
        merged.expert_ids.insert(merged.expert_ids.end(), part.transitions.size(),
                                 static_cast<std::uint32_t>(i));
    }
    write_dataset_file(output, merged);
    return merged.transitions.size();
}

EvalSummary cmd_eval(const RunConfig& cfg, const std::string& checkpoint, int episodes,
                     float eps) {
    QNetwork net;
    try {
        net = QNetwork::load(checkpoint);
    } catch (const std::exception& e) {
        throw UserError(e.what());
    }
    auto env = make_env(cfg.env, Role::Agent);
    if (net.params().input_dim() != env->state_dim() ||
        net.params().output_dim() != env->action_count())
        throw UserError("checkpoint architecture does not match environment");
    Rng rng(stream_seed(cfg.seed, 9000));
    std::vector<double> returns;
    for (int ep = 0; ep < episodes; ++ep) {
        StateVec s = env->reset();
        bool done = false;
        double ret = 0.0;
        while (!done) {
            int a = select_action(net.forward(s), eps, rng);
            StepResult sr = env->step(a);
            ret += sr.reward;
            done = sr.done;
            s = std::move(sr.state);
        }
        returns.push_back(ret);
    }
    EvalSummary out;
    for (double r : returns) out.mean_return += r;
    out.mean_return /= static_cast<double>(returns.size());
    for (double r : returns)
        out.std_return += (r - out.mean_return) * (r - out.mean_return);
    out.std_return = std::sqrt(out.std_return / static_cast<double>(returns.size()));
    out.mean_normalized = env->normalized_return(static_cast<float>(out.mean_return));
    return out;
}

void write_summary_json(const std::string& path, const RunConfig& cfg, const MetricsLog& log,
                        std::int64_t stopped_at_step) {
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    json j;
    j["config_hash"] = hash_hex;
    j["seed"] = cfg.seed;
    j["algorithm"] = cfg.algorithm;
    j["train_steps"] = cfg.train_steps;
    j["episodes"] = log.episodes.size();
    j["final_eval_mean"] = log.final_eval_mean;
    j["final_eval_std"] = log.final_eval_std;
    j["final_eval_norm"] = log.final_eval_norm;
    j["convergence_step"] = log.convergence_step;
    j["stopped_at_step"] = stopped_at_step;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Sweep plan and execution

SweepPlan SweepPlan::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UserError("cannot open plan file: " + path);
    SweepPlan plan;
    std::string dir = fs::path(path).parent_path().string();
    std::string line;
    std::string current_variant;
    KvMap top;
    KvMap current;
    auto flush_variant = [&]() {
        if (current_variant.empty()) return;
        for (const auto& [id, kv] : plan.variants)
            if (id == current_variant) throw UserError("duplicate variant id: " + id);
        plan.variants.emplace_back(current_variant, current);
        current.clear();
    };
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.front() == '[') {
            if (line.back() != ']' || line.rfind("[variant ", 0) != 0)
                throw UserError("plan line " + std::to_string(lineno) +
                                ": expected [variant <id>]");
            flush_variant();
            current_variant = line.substr(9, line.size() - 10);
            if (current_variant.empty())
                throw UserError("plan line " + std::to_string(lineno) + ": empty variant id");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError("plan line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string s) {
            size_t bb = s.find_first_not_of(" \t");
            size_t ee = s.find_last_not_of(" \t");
            return bb == std::string::npos ? std::string() : s.substr(bb, ee - bb + 1);
        };
        key = trim(key);
        value = trim(value);
        if (current_variant.empty()) {
            if (top.count(key)) throw UserError("duplicate plan key: " + key);
            top[key] = value;
        } else {
            if (current.count(key)) throw UserError("duplicate variant key: " + key);
            current[key] = value;
        }
    }
    flush_variant();

    auto it = top.find("base");
    if (it == top.end()) throw UserError("plan needs 'base = <config file>'");
    plan.base_config_path = fs::path(it->second).is_absolute()
                                ? it->second
                                : (fs::path(dir) / it->second).string();
    top.erase(it);

    it = top.find("seeds");
    if (it == top.end()) throw UserError("plan needs 'seeds = <count>' or 'seeds = a,b,c'");
    std::string seeds = it->second;
    top.erase(it);
    if (seeds.find(',') == std::string::npos) {
        int n = std::stoi(seeds);
        if (n < 1) throw UserError("plan needs at least one seed");
        for (int i = 1; i <= n; ++i) plan.seeds.push_back(static_cast<std::uint64_t>(i));
    } else {
        std::istringstream in(seeds);
        std::string tok;
        while (std::getline(in, tok, ','))
            plan.seeds.push_back(static_cast<std::uint64_t>(std::stoull(tok)));
    }

    it = top.find("out");
    if (it == top.end()) throw UserError("plan needs 'out = <directory>'");
    plan.out_dir = fs::path(it->second).is_absolute() ? it->second
                                                      : (fs::path(dir) / it->second).string();
    top.erase(it);

    it = top.find("jobs");
    if (it != top.end()) {
        plan.jobs = std::stoi(it->second);
        top.erase(it);
    }
    if (!top.empty()) throw UserError("unknown plan key: " + top.begin()->first);
    if (plan.variants.empty()) throw UserError("plan needs at least one [variant]");
    if (plan.jobs < 1) throw UserError("jobs must be >= 1");
    return plan;
}

namespace {

struct WorkerProc {
    pid_t pid = -1;
    size_t cell = 0;
};

int spawn_worker(const std::string& exe, const std::vector<std::string>& args) {
    std::vector<char*> argv;
    std::vector<std::string> storage;
    storage.push_back(exe);
    for (const auto& a : args) storage.push_back(a);
    for (auto& s : storage) argv.push_back(s.data());
    argv.push_back(nullptr);
    pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
        execv(exe.c_str(), argv.data());
        _exit(127);
    }
    return pid;
}

double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double m = mean_of(v);
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::sqrt(var / static_cast<double>(v.size()));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Pulls one column of an intervals.csv, keyed by step.
std::vector<std::pair<std::int64_t, double>> read_phi_column(const std::string& path) {
    std::ifstream f(path);
    std::vector<std::pair<std::int64_t, double>> out;
    if (!f) return out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("step,", 0) == 0) continue;
        std::istringstream in(line);
        std::string step_s, phi_s;
        if (!std::getline(in, step_s, ',') || !std::getline(in, phi_s, ',')) continue;
        out.emplace_back(std::stoll(step_s), std::stod(phi_s));
    }
    return out;
}

}  // namespace

std::vector<SweepCellResult> cmd_sweep(const SweepPlan& plan, const std::string& self_exe) {
    KvMap base = parse_kv_file(plan.base_config_path);
    std::string base_dir = fs::path(plan.base_config_path).parent_path().string();
    fs::create_directories(plan.out_dir);

    struct Cell {
        std::string variant;
        std::uint64_t seed;
        std::string dir;
        std::string cfg_path;
    };
    std::vector<Cell> cells;
    for (const auto& [variant_id, overrides] : plan.variants) {
        KvMap kv = base;
        for (const auto& [k, v] : overrides) kv[k] = v;
        for (std::uint64_t seed : plan.seeds) {
            kv["seed"] = std::to_string(seed);
            // validate up-front so the sweep fails fast on a bad variant
            run_config_from_kv(kv, base_dir);
            Cell cell;
            cell.variant = variant_id;
            cell.seed = seed;
            cell.dir = plan.out_dir + "/" + variant_id + "/seed" + std::to_string(seed);
            fs::create_directories(cell.dir);
            cell.cfg_path = cell.dir + "/config.cfg";
            std::ofstream cf(cell.cfg_path, std::ios::binary);
            // resolve relative paths against the base config's directory
            KvMap resolved = kv;
            for (const char* key : {"layout", "dataset"}) {
                auto itp = resolved.find(key);
                if (itp != resolved.end() && !itp->second.empty() &&
                    !fs::path(itp->second).is_absolute())
                    itp->second = (fs::path(base_dir) / itp->second).string();
            }
            cf << canonical_kv_text(resolved);
            cf.close();
            cells.push_back(std::move(cell));
        }
    }

    std::vector<SweepCellResult> results(cells.size());
    std::vector<WorkerProc> running;
    size_t next = 0;
    auto reap_one = [&]() {
        int status = 0;
        pid_t pid = waitpid(-1, &status, 0);
        for (size_t i = 0; i < running.size(); ++i) {
            if (running[i].pid == pid) {
                size_t cell = running[i].cell;
                results[cell].ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
                running.erase(running.begin() + i);
                return;
            }
        }
    };
    while (next < cells.size() || !running.empty()) {
        while (next < cells.size() && static_cast<int>(running.size()) < plan.jobs) {
            const Cell& cell = cells[next];
            results[next].variant = cell.variant;
            results[next].seed = cell.seed;
            int pid = spawn_worker(self_exe,
                                   {"train", "--config", cell.cfg_path, "--out", cell.dir});
            running.push_back(WorkerProc{pid, next});
            ++next;
        }
        if (!running.empty()) reap_one();
    }

    // collect summaries; failures stay recorded, the sweep continues
    for (size_t i = 0; i < cells.size(); ++i) {
        if (!results[i].ok) continue;
        std::ifstream sf(cells[i].dir + "/summary.json");
        if (!sf) {
            results[i].ok = false;
            continue;
        }
        json j = json::parse(sf, nullptr, false);
        if (j.is_discarded()) {
            results[i].ok = false;
            continue;
        }
        results[i].final_return = j.value("final_eval_mean", 0.0);
        results[i].final_norm = j.value("final_eval_norm", 0.0);
        results[i].convergence_step = j.value("convergence_step", -1);
    }

    // report: one row per variant, stable order following the plan
    std::ofstream rep(plan.out_dir + "/report.csv", std::ios::binary);
    rep << "# sweep report; std columns are population standard deviation over seeds\n";
    rep << "variant,seeds_ok,seeds_failed,mean_final_return,std_final_return,"
           "mean_final_norm,std_final_norm,mean_convergence_step\n";
    for (const auto& [variant_id, overrides] : plan.variants) {
        std::vector<double> rets, norms, convs;
        int failed = 0;
        for (size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].variant != variant_id) continue;
            if (!results[i].ok) {
                ++failed;
                continue;
            }
            rets.push_back(results[i].final_return);
            norms.push_back(results[i].final_norm);
            if (results[i].convergence_step >= 0)
                convs.push_back(static_cast<double>(results[i].convergence_step));
        }
        rep << variant_id << "," << rets.size() << "," << failed << "," << fmt(mean_of(rets))
            << "," << fmt(population_std(rets)) << "," << fmt(mean_of(norms)) << ","
            << fmt(population_std(norms)) << ","
            << (convs.empty() ? "-1" : fmt(mean_of(convs))) << "\n";

        // phi curve: mean over seeds at each logged step
        std::map<std::int64_t, std::pair<double, int>> acc;
        for (size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].variant != variant_id || !results[i].ok) continue;
            for (auto [step, phi] : read_phi_column(cells[i].dir + "/intervals.csv")) {
                acc[step].first += phi;
                acc[step].second += 1;
            }
        }
        std::ofstream pf(plan.out_dir + "/phi_" + variant_id + ".csv", std::ios::binary);
        pf << "step,mean_phi\n";
        for (const auto& [step, sum_count] : acc)
            pf << step << "," << fmt(sum_count.first / sum_count.second) << "\n";
    }
    return results;
}

}  // namespace diiq
