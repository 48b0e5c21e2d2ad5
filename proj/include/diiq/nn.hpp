#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diiq/matrix.hpp"
#include "diiq/rng.hpp"

namespace diiq {

using StateVec = std::vector<float>;

// One network's parameters plus its Adam accumulators. Weight l maps
// activations of width weights[l].cols to weights[l].rows outputs.
struct QParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<float>> biases;
    std::vector<Matrix> adam_m_w, adam_v_w;
    std::vector<std::vector<float>> adam_m_b, adam_v_b;
    std::int64_t step_count = 0;

    int num_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return weights.empty() ? 0 : weights.front().cols; }
    int output_dim() const { return weights.empty() ? 0 : weights.back().rows; }
    bool same_architecture(const QParams& o) const;
};

struct QOutput {
    std::vector<float> q_values;
};

// One entry of a weighted TD batch: pull Q(state, action) toward target
// with the given nonnegative weight.
struct TdEntry {
    StateVec state;
    int action = 0;
    float target = 0.0f;
    float sample_weight = 1.0f;
};

struct AdamConfig {
    float lr = 5e-5f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

enum class UpdateRule { Adam, Sgd };  // Sgd exists for gradient checks

// Fully connected ReLU network with a linear output layer and hand-written
// backpropagation. All math runs in double; parameters are stored as f32.
class QNetwork {
  public:
    QNetwork() = default;
    // layer_dims = {input, hidden..., output}
    QNetwork(const std::vector<int>& layer_dims, Rng& rng);

    QOutput forward(const StateVec& state) const;

    // One optimizer step minimizing sum_i w_i * (Q(s_i,a_i) - y_i)^2 / B.
    // Returns the pre-update batch loss. Throws if a gradient goes non-finite.
    double weighted_td_step(const std::vector<TdEntry>& batch, const AdamConfig& adam,
                            UpdateRule rule = UpdateRule::Adam, float sgd_lr = 0.0f);

    // Loss of the batch under current parameters, no update. Shared by tests
    // (finite differences) and the training loop's diagnostics.
    double batch_loss(const std::vector<TdEntry>& batch) const;

    // Analytic gradient w.r.t. every parameter, flattened in checkpoint order.
    std::vector<double> batch_gradient(const std::vector<TdEntry>& batch) const;

    const QParams& params() const { return params_; }
    QParams& mutable_params() { return params_; }

    std::vector<int> layer_dims() const;

    void save(const std::string& path) const;
    static QNetwork load(const std::string& path);

  private:
    QParams params_;
};

// Copies parameters of src into dest bitwise; dest's Adam moments are left
// untouched. Throws on architecture mismatch.
void sync_target(const QNetwork& src, QNetwork& dest);

// Index of the maximal Q-value, lowest index on ties. Throws on NaN.
int argmax_action(const QOutput& q);

}  // namespace diiq
