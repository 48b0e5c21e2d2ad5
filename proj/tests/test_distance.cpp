#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diiq/distance.hpp"
#include "oracles.hpp"

using namespace diiq;

namespace {

MetricSpec euclid(int n) {
    MetricSpec m;
    m.kind = MetricKind::EuclideanNormalized;
    m.state_dim = n;
    return m;
}

MetricSpec dynamic_grid(int channels, int h, int w, float w_base = 1.0f, float lambda = 2.0f) {
    MetricSpec m;
    m.kind = MetricKind::HammingDynamic;
    m.channels = channels;
    m.height = h;
    m.width = w;
    m.w_base = w_base;
    m.lambda = lambda;
    return m;
}

}  // namespace

TEST_CASE("euclidean basics") {
    MetricSpec m = euclid(4);
    StateVec a{0.2f, 0.4f, 0.6f, 0.8f};
    CHECK(state_distance(m, a, a) == 0.0f);

    StateVec zeros(4, 0.0f), ones(4, 1.0f);
    CHECK(state_distance(m, zeros, ones) == doctest::Approx(2.0).epsilon(1e-7));

    CHECK_THROWS(state_distance(m, zeros, StateVec{0.1f, 0.2f}));
    CHECK_THROWS(state_distance(m, StateVec{-0.1f, 0.0f, 0.0f, 0.0f}, ones));
    CHECK_THROWS(state_distance(m, zeros, StateVec{0.0f, 0.0f, 0.0f, 1.5f}));
}

TEST_CASE("dynamic hamming worked example: one active pixel vs empty grid") {
    MetricSpec m = dynamic_grid(1, 10, 10);
    StateVec a(100, 0.0f), b(100, 0.0f);
    a[37] = 1.0f;
    // rho = 1 - (1/100 + 0)/2 = 0.995; w = 1 + 2*0.995 = 2.99; one differing pixel
    CHECK(state_distance(m, a, b) == doctest::Approx(2.99).epsilon(1e-6));
    CHECK(state_distance(m, b, a) == doctest::Approx(2.99).epsilon(1e-6));
}

TEST_CASE("bounds") {
    CHECK(bounds(euclid(9)).d_max_state == doctest::Approx(3.0));
    CHECK(bounds(euclid(4)).err_max_transition == doctest::Approx(4.0));

    MetricSpec dyn = dynamic_grid(4, 10, 10);
    dyn.rho_max = 1.0f;
    CHECK(bounds(dyn).d_max_state == doctest::Approx(1200.0));
    CHECK(bounds(dyn).err_max_transition == doctest::Approx(2400.0));

    MetricSpec st;
    st.kind = MetricKind::HammingStatic;
    st.channels = 2;
    st.height = 3;
    st.width = 3;
    st.static_channel_weights = {2.0f, 0.5f};
    CHECK(bounds(st).d_max_state == doctest::Approx(2.0 * 9 + 0.5 * 9));
}

TEST_CASE("transition distance") {
    MetricSpec m = euclid(4);
    StateVec zeros(4, 0.0f), ones(4, 1.0f);
    CHECK(transition_distance(m, zeros, ones, zeros, ones) == 0.0f);
    CHECK(transition_distance(m, zeros, zeros, ones, ones) == doctest::Approx(4.0));
    // symmetry in the two transitions
    StateVec s1{0.1f, 0.9f, 0.3f, 0.2f}, s2{0.7f, 0.4f, 0.1f, 0.8f};
    CHECK(transition_distance(m, s1, s2, s2, s1) ==
          doctest::Approx(transition_distance(m, s2, s1, s1, s2)));
}

TEST_CASE("similarity threshold distance") {
    MetricSpec m = euclid(4);
    CHECK(similarity_threshold_distance(m, 1.0f) == 0.0f);
    CHECK(similarity_threshold_distance(m, 0.9f) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(similarity_threshold_distance(m, 0.5f) > similarity_threshold_distance(m, 0.9f));
    CHECK_THROWS(similarity_threshold_distance(m, 0.0f));
    CHECK_THROWS(similarity_threshold_distance(m, 1.5f));
}

TEST_CASE("metric axioms on randomized inputs") {
    Rng rng(42);
    MetricSpec me = euclid(6);
    MetricSpec md = dynamic_grid(2, 4, 4);
    MetricSpec ms;
    ms.kind = MetricKind::HammingStatic;
    ms.channels = 2;
    ms.height = 4;
    ms.width = 4;
    ms.static_channel_weights = {1.5f, 0.25f};

    for (int i = 0; i < 500; ++i) {
        StateVec a = oracle::random_unit_state(rng, 6);
        StateVec b = oracle::random_unit_state(rng, 6);
        float d_ab = state_distance(me, a, b);
        CHECK(d_ab >= 0.0f);
        CHECK(d_ab == state_distance(me, b, a));
        CHECK(state_distance(me, a, a) == 0.0f);

        StateVec ga = oracle::random_binary_grid(rng, 32, 0.3);
        StateVec gb = oracle::random_binary_grid(rng, 32, 0.3);
        for (const MetricSpec& m : {md, ms}) {
            float d = state_distance(m, ga, gb);
            CHECK(d >= 0.0f);
            CHECK(d == state_distance(m, gb, ga));
            CHECK(state_distance(m, ga, ga) == 0.0f);
            CHECK(d <= bounds(m).d_max_state * 1.0001f);
        }
    }
}

TEST_CASE("euclidean d_max bound holds and is approachable") {
    Rng rng(7);
    MetricSpec m = euclid(5);
    float d_max = bounds(m).d_max_state;
    for (int i = 0; i < 10000; ++i) {
        StateVec a = oracle::random_unit_state(rng, 5);
        StateVec b = oracle::random_unit_state(rng, 5);
        CHECK(state_distance(m, a, b) <= d_max);
    }
    StateVec corner_a(5, 0.0f), corner_b(5, 1.0f);
    CHECK(state_distance(m, corner_a, corner_b) > 0.95f * d_max);
}

TEST_CASE("dynamic channel weights stay within [w_base, w_base + lambda]") {
    Rng rng(11);
    MetricSpec m = dynamic_grid(1, 5, 5, 0.5f, 3.0f);
    for (int i = 0; i < 300; ++i) {
        StateVec a = oracle::random_binary_grid(rng, 25, uniform01(rng));
        StateVec b = oracle::random_binary_grid(rng, 25, uniform01(rng));
        int hamming = 0;
        for (int j = 0; j < 25; ++j)
            if ((a[j] > 0.5f) != (b[j] > 0.5f)) ++hamming;
        float d = state_distance(m, a, b);
        if (hamming == 0) {
            CHECK(d == 0.0f);
        } else {
            float per = d / hamming;
            CHECK(per >= 0.5f - 1e-5f);
            CHECK(per <= 3.5f + 1e-5f);
        }
    }
}

TEST_CASE("transition distance never exceeds err_max") {
    Rng rng(13);
    MetricSpec m = euclid(3);
    float err_max = bounds(m).err_max_transition;
    for (int i = 0; i < 2000; ++i) {
        StateVec s1 = oracle::random_unit_state(rng, 3);
        StateVec s1n = oracle::random_unit_state(rng, 3);
        StateVec s2 = oracle::random_unit_state(rng, 3);
        StateVec s2n = oracle::random_unit_state(rng, 3);
        CHECK(transition_distance(m, s1, s1n, s2, s2n) <= err_max);
    }
}

TEST_CASE("spec validation") {
    MetricSpec bad = dynamic_grid(0, 10, 10);
    CHECK_THROWS(bad.validate());
    MetricSpec st;
    st.kind = MetricKind::HammingStatic;
    st.channels = 3;
    st.height = 2;
    st.width = 2;
    st.static_channel_weights = {1.0f, 1.0f};  // wrong length
    CHECK_THROWS(st.validate());
    CHECK(metric_kind_from_string("euclidean") == MetricKind::EuclideanNormalized);
    CHECK_THROWS(metric_kind_from_string("cosine"));
}
