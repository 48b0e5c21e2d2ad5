#include "diiq/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace diiq {

bool QParams::same_architecture(const QParams& o) const {
    if (weights.size() != o.weights.size()) return false;
    for (size_t l = 0; l < weights.size(); ++l)
        if (!weights[l].same_shape(o.weights[l])) return false;
    return true;
}

QNetwork::QNetwork(const std::vector<int>& layer_dims, Rng& rng) {
    if (layer_dims.size() < 2) throw std::invalid_argument("need at least input and output dims");
    for (int d : layer_dims)
        if (d <= 0) throw std::invalid_argument("layer dims must be positive");
    for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        int in = layer_dims[l];
        int out = layer_dims[l + 1];
        Matrix w(out, in);
        float bound = 1.0f / std::sqrt(static_cast<float>(in));
        for (float& x : w.data) x = uniform_range(rng, -bound, bound);
        params_.weights.push_back(w);
        params_.biases.emplace_back(out, 0.0f);
        params_.adam_m_w.emplace_back(out, in);
        params_.adam_v_w.emplace_back(out, in);
        params_.adam_m_b.emplace_back(out, 0.0f);
        params_.adam_v_b.emplace_back(out, 0.0f);
    }
}

std::vector<int> QNetwork::layer_dims() const {
    std::vector<int> dims;
    if (params_.weights.empty()) return dims;
    dims.push_back(params_.weights.front().cols);
    for (const auto& w : params_.weights) dims.push_back(w.rows);
    return dims;
}

namespace {

// Forward pass keeping pre-activations of every layer (needed by backprop).
// activations[0] is the input; activations[l+1] = post-ReLU of layer l
// (linear for the last layer).
void forward_all(const QParams& p, const StateVec& state,
                 std::vector<std::vector<double>>& activations) {
    int layers = p.num_layers();
    activations.resize(layers + 1);
    auto& in = activations[0];
    in.assign(state.begin(), state.end());
    for (int l = 0; l < layers; ++l) {
        const Matrix& w = p.weights[l];
        const auto& b = p.biases[l];
        auto& out = activations[l + 1];
        const auto& prev = activations[l];

        // column-major accumulation for sparse inputs (one-hot grid states)
        bool sparse = false;
        if (l == 0 && w.cols >= 64) {
            int nonzero = 0;
            for (double v : prev)
                if (v != 0.0) ++nonzero;
            sparse = nonzero * 4 < w.cols;
        }
        if (sparse) {
            out.assign(b.begin(), b.end());
            for (int c = 0; c < w.cols; ++c) {
                double v = prev[c];
                if (v == 0.0) continue;
                for (int r = 0; r < w.rows; ++r)
                    out[r] += static_cast<double>(w.data[static_cast<size_t>(r) * w.cols + c]) * v;
            }
            if (l + 1 < layers)
                for (auto& v : out)
                    if (v < 0.0) v = 0.0;
            continue;
        }

        out.assign(w.rows, 0.0);
        for (int r = 0; r < w.rows; ++r) {
            const float* wr = &w.data[static_cast<size_t>(r) * w.cols];
            double acc = b[r];
            for (int c = 0; c < w.cols; ++c) acc += static_cast<double>(wr[c]) * prev[c];
            if (l + 1 < layers && acc < 0.0) acc = 0.0;  // ReLU on hidden layers
            out[r] = acc;
        }
    }
}

struct Grads {
    std::vector<Matrix> w;  // double-precision accumulation lives in dw below
    std::vector<std::vector<double>> dw;
    std::vector<std::vector<double>> db;

    explicit Grads(const QParams& p) {
        dw.resize(p.weights.size());
        db.resize(p.weights.size());
        for (size_t l = 0; l < p.weights.size(); ++l) {
            dw[l].assign(p.weights[l].data.size(), 0.0);
            db[l].assign(p.biases[l].size(), 0.0);
        }
    }
};

// Accumulates the gradient of w*(Q(s,a)-y)^2/B for one entry.
void accumulate_entry(const QParams& p, const TdEntry& e, double inv_batch, Grads& g,
                      double& loss) {
    std::vector<std::vector<double>> acts;
    forward_all(p, e.state, acts);
    int layers = p.num_layers();
    const auto& q = acts[layers];
    if (e.action < 0 || e.action >= static_cast<int>(q.size()))
        throw std::invalid_argument("TD entry action out of range");
    double err = q[e.action] - static_cast<double>(e.target);
    double w = static_cast<double>(e.sample_weight);
    loss += w * err * err * inv_batch;

    // delta at the output layer: gradient only flows through the chosen action
    std::vector<double> delta(q.size(), 0.0);
    delta[e.action] = 2.0 * w * err * inv_batch;

    for (int l = layers - 1; l >= 0; --l) {
        const Matrix& wm = p.weights[l];
        const auto& prev = acts[l];
        auto& dwl = g.dw[l];
        auto& dbl = g.db[l];
        std::vector<double> delta_prev;
        if (l > 0) delta_prev.assign(wm.cols, 0.0);
        for (int r = 0; r < wm.rows; ++r) {
            double d = delta[r];
            if (d == 0.0) continue;
            dbl[r] += d;
            const float* wr = &wm.data[static_cast<size_t>(r) * wm.cols];
            double* dwr = &dwl[static_cast<size_t>(r) * wm.cols];
            for (int c = 0; c < wm.cols; ++c) {
                // zero activations contribute nothing and their upstream
                // gradient is ReLU-gated off anyway
                if (prev[c] == 0.0) continue;
                dwr[c] += d * prev[c];
                if (l > 0) delta_prev[c] += d * static_cast<double>(wr[c]);
            }
        }
        if (l > 0) {
            // ReLU derivative: activation already clamped, so gate on > 0
            for (int c = 0; c < wm.cols; ++c)
                if (acts[l][c] <= 0.0) delta_prev[c] = 0.0;
            delta.swap(delta_prev);
        }
    }
}

void check_batch(const std::vector<TdEntry>& batch, const QParams& p) {
    if (batch.empty()) throw std::invalid_argument("empty TD batch");
    for (const auto& e : batch) {
        if (static_cast<int>(e.state.size()) != p.input_dim())
            throw std::invalid_argument("TD entry state does not match network input width");
        if (e.sample_weight < 0.0f) throw std::invalid_argument("sample_weight must be >= 0");
        if (!std::isfinite(e.target)) throw std::invalid_argument("TD target must be finite");
    }
}

}  // namespace

QOutput QNetwork::forward(const StateVec& state) const {
    if (static_cast<int>(state.size()) != params_.input_dim())
        throw std::invalid_argument("state width does not match network input width");
    std::vector<std::vector<double>> acts;
    forward_all(params_, state, acts);
    QOutput out;
    const auto& last = acts.back();
    out.q_values.assign(last.begin(), last.end());
    return out;
}

double QNetwork::batch_loss(const std::vector<TdEntry>& batch) const {
    check_batch(batch, params_);
    double inv_batch = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<std::vector<double>> acts;
    for (const auto& e : batch) {
        forward_all(params_, e.state, acts);
        double err = acts.back()[e.action] - static_cast<double>(e.target);
        loss += static_cast<double>(e.sample_weight) * err * err * inv_batch;
    }
    return loss;
}

std::vector<double> QNetwork::batch_gradient(const std::vector<TdEntry>& batch) const {
    check_batch(batch, params_);
    Grads g(params_);
    double loss = 0.0;
    double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& e : batch) accumulate_entry(params_, e, inv_batch, g, loss);
    std::vector<double> flat;
    for (size_t l = 0; l < g.dw.size(); ++l) {
        flat.insert(flat.end(), g.dw[l].begin(), g.dw[l].end());
        flat.insert(flat.end(), g.db[l].begin(), g.db[l].end());
    }
    return flat;
}

double QNetwork::weighted_td_step(const std::vector<TdEntry>& batch, const AdamConfig& adam,
                                  UpdateRule rule, float sgd_lr) {
    check_batch(batch, params_);
    Grads g(params_);
    double loss = 0.0;
    double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& e : batch) accumulate_entry(params_, e, inv_batch, g, loss);

    for (const auto& layer : g.dw)
        for (double x : layer)
            if (!std::isfinite(x))
                throw std::runtime_error("non-finite gradient in TD step (weights); "
                                         "targets or parameters diverged");
    for (const auto& layer : g.db)
        for (double x : layer)
            if (!std::isfinite(x))
                throw std::runtime_error("non-finite gradient in TD step (biases)");

    if (rule == UpdateRule::Sgd) {
        double lr = static_cast<double>(sgd_lr);
        for (int l = 0; l < params_.num_layers(); ++l) {
            auto& w = params_.weights[l].data;
            for (size_t i = 0; i < w.size(); ++i)
                w[i] = static_cast<float>(static_cast<double>(w[i]) - lr * g.dw[l][i]);
            auto& b = params_.biases[l];
            for (size_t i = 0; i < b.size(); ++i)
                b[i] = static_cast<float>(static_cast<double>(b[i]) - lr * g.db[l][i]);
        }
        return loss;
    }

    params_.step_count += 1;
    double t = static_cast<double>(params_.step_count);
    double bc1 = 1.0 - std::pow(static_cast<double>(adam.beta1), t);
    double bc2 = 1.0 - std::pow(static_cast<double>(adam.beta2), t);
    auto adam_update = [&](float& param, float& m, float& v, double grad) {
        double md = adam.beta1 * static_cast<double>(m) + (1.0 - adam.beta1) * grad;
        double vd = adam.beta2 * static_cast<double>(v) + (1.0 - adam.beta2) * grad * grad;
        m = static_cast<float>(md);
        v = static_cast<float>(vd);
        double step = static_cast<double>(adam.lr) * (md / bc1) / (std::sqrt(vd / bc2) + adam.eps);
        double next = static_cast<double>(param) - step;
        if (!std::isfinite(next)) throw std::runtime_error("non-finite parameter after Adam step");
        param = static_cast<float>(next);
    };
    for (int l = 0; l < params_.num_layers(); ++l) {
        auto& w = params_.weights[l].data;
        auto& mw = params_.adam_m_w[l].data;
        auto& vw = params_.adam_v_w[l].data;
        for (size_t i = 0; i < w.size(); ++i) adam_update(w[i], mw[i], vw[i], g.dw[l][i]);
        auto& b = params_.biases[l];
        auto& mb = params_.adam_m_b[l];
        auto& vb = params_.adam_v_b[l];
        for (size_t i = 0; i < b.size(); ++i) adam_update(b[i], mb[i], vb[i], g.db[l][i]);
    }
    return loss;
}

void sync_target(const QNetwork& src, QNetwork& dest) {
    if (!src.params().same_architecture(dest.params()))
        throw std::invalid_argument("sync_target: architecture mismatch");
    auto& d = dest.mutable_params();
    const auto& s = src.params();
    for (int l = 0; l < s.num_layers(); ++l) {
        d.weights[l].data = s.weights[l].data;
        d.biases[l] = s.biases[l];
    }
}

int argmax_action(const QOutput& q) {
    if (q.q_values.empty()) throw std::invalid_argument("argmax over empty Q vector");
    int best = 0;
    for (size_t i = 0; i < q.q_values.size(); ++i) {
        float v = q.q_values[i];
        if (std::isnan(v)) throw std::runtime_error("NaN Q-value in argmax_action");
        if (v > q.q_values[best]) best = static_cast<int>(i);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Checkpoint format: little-endian, "DIQW" magic, u32 version, u32 layer
// count, then u32 rows/cols per layer, then raw f32 weights and biases per
// layer in order. Round-trips bit-exactly.

namespace {
constexpr std::uint32_t kMagic = 0x57514944;  // "DIQW"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("truncated checkpoint file");
}
}  // namespace

void QNetwork::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    write_pod(f, kMagic);
    write_pod(f, kVersion);
    std::uint32_t layers = static_cast<std::uint32_t>(params_.num_layers());
    write_pod(f, layers);
    for (const auto& w : params_.weights) {
        write_pod(f, static_cast<std::uint32_t>(w.rows));
        write_pod(f, static_cast<std::uint32_t>(w.cols));
    }
    for (int l = 0; l < params_.num_layers(); ++l) {
        const auto& w = params_.weights[l];
        f.write(reinterpret_cast<const char*>(w.data.data()), w.data.size() * sizeof(float));
        const auto& b = params_.biases[l];
        f.write(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(float));
    }
    if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

QNetwork QNetwork::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    std::uint32_t magic = 0, version = 0, layers = 0;
    read_pod(f, magic);
    if (magic != kMagic) throw std::runtime_error("bad checkpoint magic: " + path);
    read_pod(f, version);
    if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
    read_pod(f, layers);
    QNetwork net;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(layers);
    for (auto& [r, c] : shapes) {
        read_pod(f, r);
        read_pod(f, c);
    }
    for (auto& [r, c] : shapes) {
        Matrix w(static_cast<int>(r), static_cast<int>(c));
        f.read(reinterpret_cast<char*>(w.data.data()), w.data.size() * sizeof(float));
        std::vector<float> b(r, 0.0f);
        f.read(reinterpret_cast<char*>(b.data()), b.size() * sizeof(float));
        if (!f) throw std::runtime_error("truncated checkpoint file");
        net.params_.weights.push_back(std::move(w));
        net.params_.biases.push_back(std::move(b));
        net.params_.adam_m_w.emplace_back(static_cast<int>(r), static_cast<int>(c));
        net.params_.adam_v_w.emplace_back(static_cast<int>(r), static_cast<int>(c));
        net.params_.adam_m_b.emplace_back(r, 0.0f);
        net.params_.adam_v_b.emplace_back(r, 0.0f);
    }
    // chain validity
    for (size_t l = 0; l + 1 < net.params_.weights.size(); ++l)
        if (net.params_.weights[l].rows != net.params_.weights[l + 1].cols)
            throw std::runtime_error("checkpoint layer shapes do not chain");
    return net;
}

}  // namespace diiq
