#include "diiq/distance.hpp"

#include <cmath>
#include <stdexcept>

namespace diiq {

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "euclidean") return MetricKind::EuclideanNormalized;
    if (s == "hamming-static") return MetricKind::HammingStatic;
    if (s == "hamming-dynamic") return MetricKind::HammingDynamic;
    throw std::invalid_argument("unknown metric kind: " + s);
}

std::string metric_kind_to_string(MetricKind k) {
    switch (k) {
        case MetricKind::EuclideanNormalized: return "euclidean";
        case MetricKind::HammingStatic: return "hamming-static";
        case MetricKind::HammingDynamic: return "hamming-dynamic";
    }
    return "?";
}

int MetricSpec::total_dim() const {
    if (kind == MetricKind::EuclideanNormalized) return state_dim;
    return channels * height * width;
}

void MetricSpec::validate() const {
    if (kind == MetricKind::EuclideanNormalized) {
        if (state_dim <= 0) throw std::invalid_argument("euclidean metric needs state_dim > 0");
        return;
    }
    if (channels <= 0 || height <= 0 || width <= 0)
        throw std::invalid_argument("hamming metric needs channels/height/width > 0");
    if (w_base <= 0.0f) throw std::invalid_argument("w_base must be > 0");
    if (lambda < 0.0f) throw std::invalid_argument("lambda must be >= 0");
    if (kind == MetricKind::HammingStatic) {
        if (static_channel_weights.size() != static_cast<size_t>(channels))
            throw std::invalid_argument("static channel weights must match channel count");
        for (float w : static_channel_weights)
            if (w < 0.0f) throw std::invalid_argument("static channel weights must be >= 0");
    }
}

namespace {

void check_dims(const MetricSpec& spec, const StateVec& v) {
    if (static_cast<int>(v.size()) != spec.total_dim())
        throw std::invalid_argument("state dimension does not match metric spec");
}

inline bool active(float x) { return x > 0.5f; }

float euclidean(const StateVec& a, const StateVec& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        float x = a[i], y = b[i];
        if (x < 0.0f || x > 1.0f || y < 0.0f || y > 1.0f)
            throw std::invalid_argument("euclidean metric requires components in [0,1]");
        double d = static_cast<double>(x) - y;
        acc += d * d;
    }
    return static_cast<float>(std::sqrt(acc));
}

// Per-channel Hamming counts, plus active-pixel counts for the dynamic weights.
struct ChannelStats {
    int hamming = 0;
    int active_a = 0;
    int active_b = 0;
};

ChannelStats channel_stats(const StateVec& a, const StateVec& b, int offset, int pixels) {
    ChannelStats st;
    for (int i = 0; i < pixels; ++i) {
        bool xa = active(a[offset + i]);
        bool xb = active(b[offset + i]);
        if (xa != xb) ++st.hamming;
        if (xa) ++st.active_a;
        if (xb) ++st.active_b;
    }
    return st;
}

}  // namespace

float state_distance(const MetricSpec& spec, const StateVec& a, const StateVec& b) {
    check_dims(spec, a);
    check_dims(spec, b);
    switch (spec.kind) {
        case MetricKind::EuclideanNormalized:
            return euclidean(a, b);
        case MetricKind::HammingStatic: {
            int pixels = spec.height * spec.width;
            double acc = 0.0;
            for (int c = 0; c < spec.channels; ++c) {
                ChannelStats st = channel_stats(a, b, c * pixels, pixels);
                acc += static_cast<double>(spec.static_channel_weights[c]) * st.hamming;
            }
            return static_cast<float>(acc);
        }
        case MetricKind::HammingDynamic: {
            int pixels = spec.height * spec.width;
            double acc = 0.0;
            for (int c = 0; c < spec.channels; ++c) {
                ChannelStats st = channel_stats(a, b, c * pixels, pixels);
                // averaged sparsity of the channel over both states
                double rho = 1.0 - 0.5 * (static_cast<double>(st.active_a) / pixels +
                                          static_cast<double>(st.active_b) / pixels);
                double w = spec.w_base + spec.lambda * rho;
                acc += w * st.hamming;
            }
            return static_cast<float>(acc);
        }
    }
    return 0.0f;
}

float transition_distance(const MetricSpec& spec, const StateVec& s1, const StateVec& s1n,
                          const StateVec& s2, const StateVec& s2n) {
    return state_distance(spec, s1, s2) + state_distance(spec, s1n, s2n);
}

DistanceBounds bounds(const MetricSpec& spec) {
    spec.validate();
    DistanceBounds b;
    switch (spec.kind) {
        case MetricKind::EuclideanNormalized:
            b.d_max_state = static_cast<float>(std::sqrt(static_cast<double>(spec.state_dim)));
            break;
        case MetricKind::HammingStatic: {
            double pixels = spec.height * spec.width;
            double acc = 0.0;
            for (float w : spec.static_channel_weights) acc += static_cast<double>(w) * pixels;
            b.d_max_state = static_cast<float>(acc);
            break;
        }
        case MetricKind::HammingDynamic: {
            double total_pixels = static_cast<double>(spec.channels) * spec.height * spec.width;
            b.d_max_state = static_cast<float>((spec.w_base + spec.lambda * spec.rho_max) * total_pixels);
            break;
        }
    }
    b.err_max_transition = 2.0f * b.d_max_state;
    return b;
}

float similarity_threshold_distance(const MetricSpec& spec, float tau) {
    if (!(tau > 0.0f && tau <= 1.0f)) throw std::invalid_argument("tau must be in (0,1]");
    return (1.0f - tau) * bounds(spec).d_max_state;
}

}  // namespace diiq
