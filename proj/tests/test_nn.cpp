#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "diiq/nn.hpp"
#include "oracles.hpp"

using namespace diiq;

namespace {

QNetwork make_net(const std::vector<int>& dims, std::uint64_t seed) {
    Rng rng(seed);
    return QNetwork(dims, rng);
}

// Random net/batch pair away from ReLU kinks so central differences are
// trustworthy (rejection keeps every hidden pre-activation off zero).
struct GradCase {
    QNetwork net;
    std::vector<TdEntry> batch;
};

GradCase random_grad_case(Rng& rng, const std::vector<int>& dims, int batch_size) {
    for (;;) {
        Rng net_rng(rng());
        QNetwork net(dims, net_rng);
        std::vector<TdEntry> batch;
        for (int i = 0; i < batch_size; ++i) {
            TdEntry e;
            e.state = oracle::random_unit_state(rng, dims.front());
            e.action = uniform_int(rng, dims.back());
            e.target = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
            e.sample_weight = static_cast<float>(uniform01(rng) + 0.1);
            batch.push_back(std::move(e));
        }
        if (oracle::min_hidden_preactivation(net, batch) > 1e-4)
            return GradCase{std::move(net), std::move(batch)};
    }
}

std::vector<float> flatten_params(const QParams& p) {
    std::vector<float> out;
    for (int l = 0; l < p.num_layers(); ++l) {
        out.insert(out.end(), p.weights[l].data.begin(), p.weights[l].data.end());
        out.insert(out.end(), p.biases[l].begin(), p.biases[l].end());
    }
    return out;
}

}  // namespace

TEST_CASE("forward: zero parameters give zero Q") {
    QNetwork net = make_net({3, 4, 2}, 1);
    auto& p = net.mutable_params();
    for (auto& w : p.weights) std::fill(w.data.begin(), w.data.end(), 0.0f);
    for (auto& b : p.biases) std::fill(b.begin(), b.end(), 0.0f);
    QOutput q = net.forward({0.3f, 0.9f, 0.1f});
    for (float v : q.q_values) CHECK(v == 0.0f);
}

TEST_CASE("forward: hand-computed 2-2-2 example") {
    QNetwork net = make_net({2, 2, 2}, 1);
    auto& p = net.mutable_params();
    // hidden layer = identity
    p.weights[0].data = {1.0f, 0.0f, 0.0f, 1.0f};
    p.biases[0] = {0.0f, 0.0f};
    // output layer [[1,2],[3,4]] with bias [0.5,-0.5]
    p.weights[1].data = {1.0f, 2.0f, 3.0f, 4.0f};
    p.biases[1] = {0.5f, -0.5f};
    // state (0.3, -0.7): ReLU hidden -> (0.3, 0)
    QOutput q = net.forward({0.3f, -0.7f});
    CHECK(q.q_values[0] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(q.q_values[1] == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("forward is pure and deterministic") {
    QNetwork net = make_net({4, 8, 3}, 99);
    StateVec s{0.1f, 0.2f, 0.3f, 0.4f};
    QOutput a = net.forward(s);
    QOutput b = net.forward(s);
    CHECK(a.q_values == b.q_values);
    CHECK_THROWS(net.forward({0.1f, 0.2f}));
}

TEST_CASE("weighted_td_step: zero TD error leaves parameters unchanged") {
    // power-of-two parameters keep the forward pass exact in f32, so the
    // targets can hit the current Q values precisely
    QNetwork net = make_net({2, 2, 3}, 5);
    auto& p = net.mutable_params();
    p.weights[0].data = {0.5f, 0.25f, -0.5f, 1.0f};
    p.biases[0] = {0.125f, 0.25f};
    p.weights[1].data = {1.0f, 0.5f, -0.25f, 0.5f, 2.0f, 0.0f};
    p.biases[1] = {0.25f, -0.125f, 0.5f};
    std::vector<TdEntry> batch;
    for (float x : {0.0f, 0.25f, 0.5f, 1.0f}) {
        TdEntry e;
        e.state = {x, 0.5f};
        e.action = static_cast<int>(x * 2) % 3;
        e.target = net.forward(e.state).q_values[e.action];
        e.sample_weight = 1.0f;
        batch.push_back(e);
    }
    auto before = flatten_params(net.params());
    AdamConfig adam;
    double loss = net.weighted_td_step(batch, adam);
    CHECK(loss == 0.0);
    CHECK(flatten_params(net.params()) == before);
}

TEST_CASE("weighted_td_step: zero weight means no update") {
    QNetwork net = make_net({2, 6, 3}, 6);
    std::vector<TdEntry> batch{{{0.5f, 0.5f}, 1, 123.0f, 0.0f}};
    auto before = flatten_params(net.params());
    AdamConfig adam;
    CHECK(net.weighted_td_step(batch, adam) == 0.0);
    CHECK(flatten_params(net.params()) == before);
}

TEST_CASE("analytic gradient matches central finite differences (3-layer, 8 samples)") {
    Rng rng(2024);
    GradCase gc = random_grad_case(rng, {4, 16, 16, 3}, 8);
    auto analytic = gc.net.batch_gradient(gc.batch);
    auto fd = oracle::finite_diff_gradient(gc.net, gc.batch);
    CHECK(oracle::gradients_match(analytic, fd));
}

TEST_CASE("gradient check across several random shapes") {
    Rng rng(31337);
    for (auto dims : {std::vector<int>{2, 8, 4}, {3, 12, 8, 2}, {5, 6, 6, 6, 4}}) {
        for (int rep = 0; rep < 3; ++rep) {
            GradCase gc = random_grad_case(rng, dims, 5);
            auto analytic = gc.net.batch_gradient(gc.batch);
            auto fd = oracle::finite_diff_gradient(gc.net, gc.batch);
            CHECK(oracle::gradients_match(analytic, fd));
        }
    }
}

TEST_CASE("loss decreases under repeated Adam steps on a fixed batch") {
    Rng rng(77);
    GradCase gc = random_grad_case(rng, {3, 32, 32, 4}, 16);
    AdamConfig adam;
    adam.lr = 5e-5f;
    double prev = gc.net.batch_loss(gc.batch);
    int decreases = 0;
    for (int i = 0; i < 50; ++i) {
        gc.net.weighted_td_step(gc.batch, adam);
        double cur = gc.net.batch_loss(gc.batch);
        if (cur < prev) ++decreases;
        prev = cur;
    }
    CHECK(decreases >= 45);
}

TEST_CASE("sample-weight scaling is exact for powers of two") {
    Rng rng(555);
    GradCase gc = random_grad_case(rng, {3, 10, 4}, 6);
    double base = gc.net.batch_loss(gc.batch);
    auto scaled = gc.batch;
    for (auto& e : scaled) e.sample_weight *= 2.0f;
    CHECK(gc.net.batch_loss(scaled) == 2.0 * base);

    // gradient doubles exactly in double precision
    auto ga = gc.net.batch_gradient(gc.batch);
    auto gb = gc.net.batch_gradient(scaled);
    for (size_t i = 0; i < ga.size(); ++i) CHECK(gb[i] == 2.0 * ga[i]);

    // and the SGD parameter deltas double, up to f32 parameter quantization
    QNetwork a = gc.net, b = gc.net;
    AdamConfig adam;
    a.weighted_td_step(gc.batch, adam, UpdateRule::Sgd, 1e-3f);
    b.weighted_td_step(scaled, adam, UpdateRule::Sgd, 1e-3f);
    auto pa = flatten_params(a.params());
    auto pb = flatten_params(b.params());
    auto p0 = flatten_params(gc.net.params());
    for (size_t i = 0; i < pa.size(); ++i) {
        double da = static_cast<double>(pa[i]) - p0[i];
        double db = static_cast<double>(pb[i]) - p0[i];
        // one ulp of the parameter (~6e-8 near 0.5) per rounding
        CHECK(std::abs(db - 2.0 * da) < 2e-7 + 1e-4 * std::abs(db));
    }
}

TEST_CASE("argmax_action") {
    CHECK(argmax_action(QOutput{{0.1f, 0.9f, 0.3f}}) == 1);
    CHECK(argmax_action(QOutput{{0.5f, 0.5f}}) == 0);
    CHECK(argmax_action(QOutput{{0.2f, 0.2f, 0.2f, 0.2f}}) == 0);
    CHECK_THROWS(argmax_action(QOutput{}));
    CHECK_THROWS(argmax_action(QOutput{{0.1f, std::nanf(""), 0.2f}}));
    // invariance under constant shifts
    QOutput q{{0.3f, -0.2f, 0.9f, 0.1f}};
    QOutput shifted = q;
    for (auto& v : shifted.q_values) v += 5.0f;
    CHECK(argmax_action(q) == argmax_action(shifted));
}

TEST_CASE("sync_target semantics") {
    QNetwork src = make_net({3, 8, 2}, 10);
    QNetwork dst = make_net({3, 8, 2}, 20);
    sync_target(src, dst);
    StateVec s{0.4f, 0.5f, 0.6f};
    CHECK(src.forward(s).q_values == dst.forward(s).q_values);

    // updating the source leaves the copy untouched
    std::vector<TdEntry> batch{{s, 0, 5.0f, 1.0f}};
    AdamConfig adam;
    adam.lr = 0.05f;
    auto dst_before = flatten_params(dst.params());
    src.weighted_td_step(batch, adam);
    CHECK(flatten_params(dst.params()) == dst_before);
    CHECK(src.forward(s).q_values != dst.forward(s).q_values);

    // idempotent
    sync_target(src, dst);
    auto once = flatten_params(dst.params());
    sync_target(src, dst);
    CHECK(flatten_params(dst.params()) == once);

    QNetwork other = make_net({3, 9, 2}, 30);
    CHECK_THROWS(sync_target(src, other));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    QNetwork net = make_net({5, 16, 8, 3}, 123);
    std::string path = (std::filesystem::temp_directory_path() / "diiq_nn_ckpt_test.bin").string();
    net.save(path);
    QNetwork loaded = QNetwork::load(path);
    CHECK(flatten_params(loaded.params()) == flatten_params(net.params()));
    CHECK(loaded.layer_dims() == net.layer_dims());
    std::filesystem::remove(path);
}

TEST_CASE("adam leaves target moments alone and rejects non-finite targets") {
    QNetwork net = make_net({2, 4, 2}, 9);
    std::vector<TdEntry> bad{{{0.1f, 0.1f}, 0, std::numeric_limits<float>::infinity(), 1.0f}};
    AdamConfig adam;
    CHECK_THROWS(net.weighted_td_step(bad, adam));
    CHECK_THROWS(net.weighted_td_step({}, adam));
}
