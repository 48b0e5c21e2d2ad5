#include "diiq/expert.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace diiq {

namespace {

// Exact-equality hash key over the raw float bytes.
struct StateBytesHash {
    std::size_t operator()(const StateVec& v) const {
        std::size_t h = 1469598103934665603ull;
        for (float f : v) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof(bits));
            h ^= bits;
            h *= 1099511628211ull;
        }
        return h;
    }
};

bool states_equal_eps(const StateVec& a, const StateVec& b, float eps) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::fabs(a[i] - b[i]) > eps) return false;
    return true;
}

}  // namespace

ExpertDataset::ExpertDataset(const MetricSpec& metric, int agent_action_count, int c_max,
                             float chain_epsilon)
    : metric_(metric),
      bounds_(bounds(metric)),
      agent_action_count_(agent_action_count),
      c_max_(c_max),
      chain_epsilon_(chain_epsilon) {
    if (agent_action_count_ <= 0) throw std::invalid_argument("agent action count must be > 0");
    if (c_max_ <= 0) throw std::invalid_argument("c_max must be > 0");
}

void ExpertDataset::append(StateVec s, StateVec sn, std::uint32_t expert_id, Rng& rng) {
    if (static_cast<int>(s.size()) != metric_.total_dim() ||
        static_cast<int>(sn.size()) != metric_.total_dim())
        throw std::invalid_argument("expert transition dimension does not match metric");
    ExpertRecord rec;
    rec.s_e = std::move(s);
    rec.s_e_next = std::move(sn);
    rec.a_e = uniform_int(rng, agent_action_count_);
    rec.expert_id = expert_id;
    records_.push_back(std::move(rec));
}

ExpertDataset ExpertDataset::load(const std::vector<std::pair<StateVec, StateVec>>& transitions,
                                  const MetricSpec& metric, int agent_action_count, int c_max,
                                  Rng& rng, float chain_epsilon,
                                  const std::vector<std::uint32_t>& expert_ids) {
    if (!expert_ids.empty() && expert_ids.size() != transitions.size())
        throw std::invalid_argument("expert_ids size mismatch");
    ExpertDataset ds(metric, agent_action_count, c_max, chain_epsilon);
    for (size_t i = 0; i < transitions.size(); ++i)
        ds.append(transitions[i].first, transitions[i].second,
                  expert_ids.empty() ? 0 : expert_ids[i], rng);
    ds.build_chains();
    return ds;
}

std::vector<std::uint32_t> ExpertDataset::knn(const StateVec& query, int k) const {
    if (k < 1) throw std::invalid_argument("knn needs k >= 1");
    std::vector<std::pair<float, std::uint32_t>> d;
    d.reserve(records_.size());
    for (std::uint32_t i = 0; i < records_.size(); ++i)
        d.emplace_back(state_distance(metric_, query, records_[i].s_e), i);
    size_t kk = std::min<size_t>(k, d.size());
    std::partial_sort(d.begin(), d.begin() + kk, d.end());
    std::vector<std::uint32_t> out;
    out.reserve(kk);
    for (size_t i = 0; i < kk; ++i) out.push_back(d[i].second);
    return out;
}

void ExpertDataset::infer_actions(const StateVec& s_a, int a_a, const StateVec& s_a_next,
                                  const std::vector<std::uint32_t>& candidates) {
    for (std::uint32_t i : candidates) {
        ExpertRecord& rec = records_.at(i);
        float d = transition_distance(metric_, s_a, s_a_next, rec.s_e, rec.s_e_next);
        if (d < rec.err_a_e) {
            rec.a_e = a_a;
            rec.err_a_e = d;
        }
    }
}

std::optional<std::uint32_t> ExpertDataset::sample_similar(const StateVec& s_a, int k,
                                                           float tau_similar, Rng& rng) {
    if (records_.empty()) return std::nullopt;
    float thresh = similarity_threshold_distance(metric_, tau_similar);
    std::vector<std::uint32_t> nearest = knn(s_a, k);
    std::vector<std::uint32_t> survivors;
    for (std::uint32_t i : nearest)
        if (state_distance(metric_, s_a, records_[i].s_e) <= thresh) survivors.push_back(i);
    if (survivors.empty()) return std::nullopt;
    for (std::uint32_t i : survivors) increment_counter(i);
    return survivors[uniform_int(rng, static_cast<int>(survivors.size()))];
}

void ExpertDataset::build_chains() {
    for (auto& r : records_) r.next_in_chain.reset();
    if (records_.empty()) return;
    if (chain_epsilon_ <= 0.0f) {
        std::unordered_map<StateVec, std::uint32_t, StateBytesHash> first_at;
        for (std::uint32_t i = 0; i < records_.size(); ++i)
            first_at.try_emplace(records_[i].s_e, i);
        for (auto& r : records_) {
            auto it = first_at.find(r.s_e_next);
            if (it != first_at.end()) r.next_in_chain = it->second;
        }
    } else {
        for (auto& r : records_) {
            for (std::uint32_t j = 0; j < records_.size(); ++j) {
                if (states_equal_eps(r.s_e_next, records_[j].s_e, chain_epsilon_)) {
                    r.next_in_chain = j;
                    break;
                }
            }
        }
    }
}

float ExpertDataset::reliability(std::uint32_t i) const {
    const ExpertRecord& rec = records_.at(i);
    if (!std::isfinite(rec.err_a_e)) return 0.0f;
    float v = 1.0f - rec.err_a_e / bounds_.err_max_transition;
    return std::clamp(v, 0.0f, 1.0f);
}

void ExpertDataset::increment_counter(std::uint32_t i) {
    ExpertRecord& rec = records_.at(i);
    rec.c_s_e = std::min(rec.c_s_e + 1, c_max_);
}

ExpertDataset::Stats ExpertDataset::stats() const {
    Stats st;
    if (records_.empty()) return st;
    double err_sum = 0.0;
    std::uint64_t infeasible = 0, bridges = 0;
    double len_sum = 0.0;
    for (const auto& r : records_) {
        err_sum += std::isfinite(r.err_a_e) ? r.err_a_e : bounds_.err_max_transition;
        if (r.infeasible) ++infeasible;
        if (r.bridge) {
            ++bridges;
            len_sum += r.bridge->l_feas;
        }
    }
    st.mean_err = err_sum / static_cast<double>(records_.size());
    st.infeasible_fraction = static_cast<double>(infeasible) / static_cast<double>(records_.size());
    st.bridge_count = static_cast<std::uint32_t>(bridges);
    st.mean_bridge_length = bridges == 0 ? 0.0 : len_sum / static_cast<double>(bridges);
    return st;
}

// ---------------------------------------------------------------------------
// Dataset file: "DIEX" magic, version, metric geometry, record count, packed
// f32 state pairs, then one u32 expert id per record.

namespace {
constexpr std::uint32_t kMagic = 0x58454944;  // "DIEX"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("truncated expert dataset file");
}
}  // namespace

void write_dataset_file(const std::string& path, const RawDataset& raw) {
    if (!raw.expert_ids.empty() && raw.expert_ids.size() != raw.transitions.size())
        throw std::invalid_argument("expert_ids size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open dataset for writing: " + path);
    write_pod(f, kMagic);
    write_pod(f, kVersion);
    write_pod(f, static_cast<std::uint32_t>(raw.metric.kind));
    write_pod(f, static_cast<std::uint32_t>(raw.metric.state_dim));
    write_pod(f, static_cast<std::uint32_t>(raw.metric.channels));
    write_pod(f, static_cast<std::uint32_t>(raw.metric.height));
    write_pod(f, static_cast<std::uint32_t>(raw.metric.width));
    write_pod(f, static_cast<std::uint64_t>(raw.transitions.size()));
    for (const auto& [s, sn] : raw.transitions) {
        f.write(reinterpret_cast<const char*>(s.data()), s.size() * sizeof(float));
        f.write(reinterpret_cast<const char*>(sn.data()), sn.size() * sizeof(float));
    }
    for (size_t i = 0; i < raw.transitions.size(); ++i)
        write_pod(f, raw.expert_ids.empty() ? std::uint32_t{0} : raw.expert_ids[i]);
    if (!f) throw std::runtime_error("failed writing dataset: " + path);
}

RawDataset read_dataset_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open expert dataset: " + path);
    std::uint32_t magic = 0, version = 0, kind = 0, dim = 0, ch = 0, h = 0, w = 0;
    std::uint64_t count = 0;
    read_pod(f, magic);
    if (magic != kMagic) throw std::runtime_error("bad expert dataset magic: " + path);
    read_pod(f, version);
    if (version != kVersion) throw std::runtime_error("unsupported dataset version");
    read_pod(f, kind);
    read_pod(f, dim);
    read_pod(f, ch);
    read_pod(f, h);
    read_pod(f, w);
    read_pod(f, count);
    RawDataset raw;
    raw.metric.kind = static_cast<MetricKind>(kind);
    raw.metric.state_dim = static_cast<int>(dim);
    raw.metric.channels = static_cast<int>(ch);
    raw.metric.height = static_cast<int>(h);
    raw.metric.width = static_cast<int>(w);
    if (raw.metric.kind == MetricKind::HammingStatic)
        raw.metric.static_channel_weights.assign(raw.metric.channels, 1.0f);
    raw.metric.validate();
    int sdim = raw.metric.total_dim();
    raw.transitions.resize(count);
    for (auto& [s, sn] : raw.transitions) {
        s.resize(sdim);
        sn.resize(sdim);
        f.read(reinterpret_cast<char*>(s.data()), sdim * sizeof(float));
        f.read(reinterpret_cast<char*>(sn.data()), sdim * sizeof(float));
        if (!f) throw std::runtime_error("truncated expert dataset file");
    }
    raw.expert_ids.assign(count, 0);
    for (auto& id : raw.expert_ids) read_pod(f, id);
    return raw;
}

void ExpertDataset::save(const std::string& path) const {
    RawDataset raw;
    raw.metric = metric_;
    raw.transitions.reserve(records_.size());
    raw.expert_ids.reserve(records_.size());
    for (const auto& r : records_) {
        raw.transitions.emplace_back(r.s_e, r.s_e_next);
        raw.expert_ids.push_back(r.expert_id);
    }
    write_dataset_file(path, raw);
}

ExpertDataset ExpertDataset::load_file(const std::string& path, int agent_action_count, int c_max,
                                       Rng& rng, float chain_epsilon) {
    RawDataset raw = read_dataset_file(path);
    return load(raw.transitions, raw.metric, agent_action_count, c_max, rng, chain_epsilon,
                raw.expert_ids);
}

}  // namespace diiq
