#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diiq/nn.hpp"

namespace diiq {

struct ConfidenceParams {
    float beta = 1.0f;   // sigmoid sharpness
    int c_max = 100;     // training updates per expert region for full trust
    float err_max = 0.0f;

    void validate() const {
        if (beta <= 0.0f || c_max <= 0 || err_max <= 0.0f)
            throw std::invalid_argument("confidence parameters must be strictly positive");
    }
};

// sigma((Q[a_e] - Q[a_a]) * beta): how much better the expert's action looks
// than the agent's at the expert state. Exactly 0.5 when the actions agree.
inline float delta_q(const QOutput& q, int a_e, int a_a, float beta) {
    int n = static_cast<int>(q.q_values.size());
    if (a_e < 0 || a_e >= n || a_a < 0 || a_a >= n)
        throw std::invalid_argument("delta_q: action index out of range");
    if (a_e == a_a) return 0.5f;
    double diff = (static_cast<double>(q.q_values[a_e]) - q.q_values[a_a]) *
                  static_cast<double>(beta);
    return static_cast<float>(1.0 / (1.0 + std::exp(-diff)));
}

// log(1 + min(c, c_max)) / log(1 + c_max): trust in local Q-value estimates.
inline float discount_weight(int c, int c_max) {
    if (c < 0) throw std::invalid_argument("discount_weight: negative counter");
    if (c_max <= 0) throw std::invalid_argument("discount_weight: c_max must be > 0");
    int cc = std::min(c, c_max);
    return static_cast<float>(std::log1p(static_cast<double>(cc)) /
                              std::log1p(static_cast<double>(c_max)));
}

// min(dq * w, eps): expert influence, vetoed by unreliable action inference.
inline float phi_homogeneous(float dq, float w, float eps) {
    return std::min(dq * w, eps);
}

// dq_feas * w: bridged transitions carry no inference uncertainty, so the
// reliability clip disappears.
inline float phi_heterogeneous(float dq_feas, float w) {
    return dq_feas * w;
}

// phi * (pred_e - target_e)^2 + (1 - phi) * (pred_a - target_a)^2.
// phi acts as a constant weight; no gradient flows through it.
inline double blend_targets(float phi, float target_e, float target_a, float pred_e,
                            float pred_a) {
    double ee = static_cast<double>(pred_e) - target_e;
    double ea = static_cast<double>(pred_a) - target_a;
    return static_cast<double>(phi) * ee * ee + (1.0 - static_cast<double>(phi)) * ea * ea;
}

}  // namespace diiq
