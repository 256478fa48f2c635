#include <gtest/gtest.h>

#include <cmath>

#include "comet/function_approx.hpp"
#include "comet/random.hpp"
#include "fixtures.hpp"

using namespace comet;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = uniform_real(rng, -1.5, 1.5);
    return x;
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZero) {
    auto m = MlpApprox::zeros({4, 8, 8, 1}, 0.1);
    Rng rng(1);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(m.forward(random_input(rng, 4)), 0.0);
}

TEST(Mlp, SingleLinearLayer) {
    auto m = MlpApprox::zeros({3, 1}, 0.1);
    m.set_parameters(std::vector<double>{0.5, -2.0, 3.0, 0.0});
    const std::vector<double> x{1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(m.forward(x), 0.5 - 4.0 + 9.0);
}

TEST(Mlp, ForwardIsPure) {
    Rng rng(2);
    const auto m = MlpApprox::random({5, 32, 32, 1}, 0.01, rng);
    const auto x = random_input(rng, 5);
    EXPECT_EQ(m.forward(x), m.forward(x));
}

TEST(Mlp, StateActionSplitMatchesConcatenation) {
    Rng rng(3);
    const auto m = MlpApprox::random({6, 4, 1}, 0.01, rng);
    const std::vector<double> s{0.1, 0.2, 0.3, 0.4}, a{0.0, 1.0};
    EXPECT_EQ(m.forward(s, a), m.forward(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.0, 1.0}));
}

TEST(Mlp, DimensionMismatchThrows) {
    const auto m = MlpApprox::zeros({4, 2, 1}, 0.1);
    EXPECT_THROW((void)m.forward(std::vector<double>{1.0, 2.0}), ArgumentError);
    EXPECT_THROW((void)m.forward(std::vector<double>{1.0}, std::vector<double>{1.0}), ArgumentError);
}

TEST(Mlp, InitWithinFanInBound) {
    Rng rng(4);
    auto m = MlpApprox::random({16, 8, 1}, 0.01, rng);
    for (double w : m.weights(0)) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(16.0));
    for (double w : m.weights(1)) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(8.0));
    for (double b : m.biases(0)) EXPECT_EQ(b, 0.0);
}

TEST(SgdStep, TargetAtOutputLeavesWeights) {
    Rng rng(5);
    const auto m = MlpApprox::random({3, 6, 1}, 0.1, rng);
    const auto x = random_input(rng, 3);
    EXPECT_EQ(m.sgd_step(x, m.forward(x)).parameters(), m.parameters());
}

TEST(SgdStep, ZeroStepSizeIsIdentity) {
    Rng rng(6);
    const auto m = MlpApprox::random({3, 6, 1}, 0.0, rng);
    const auto x = random_input(rng, 3);
    EXPECT_EQ(m.sgd_step(x, 10.0).parameters(), m.parameters());
}

TEST(SgdStep, LinearClosedForm) {
    auto m = MlpApprox::zeros({1, 1}, 0.1);
    m.set_parameters(std::vector<double>{2.0, 0.5});
    // f = 2 * 3 + 0.5 = 6.5, target 1: residual 5.5
    const auto next = m.sgd_step(std::vector<double>{3.0}, 1.0);
    const auto p = next.parameters();
    EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.1 * 5.5 * 3.0);
    EXPECT_DOUBLE_EQ(p[1], 0.5 - 0.1 * 5.5);
    EXPECT_EQ(m.parameters()[0], 2.0);  // value semantics
}

TEST(SgdStep, NonFiniteTargetRejected) {
    auto m = MlpApprox::zeros({2, 1}, 0.1);
    EXPECT_THROW((void)m.sgd_step(std::vector<double>{1.0, 1.0}, std::nan("")), ArgumentError);
    EXPECT_THROW((void)m.sgd_step(std::vector<double>{1.0, 1.0}, INFINITY), ArgumentError);
}

TEST(SgdStep, ErrorShrinksMonotonically) {
    Rng rng(7);
    auto m = MlpApprox::random({6, 32, 32, 1}, 1e-3, rng);
    const auto x = random_input(rng, 6);
    const double target = 0.75;
    double prev = std::abs(m.forward(x) - target);
    for (int i = 0; i < 1000; ++i) {
        m.sgd_step_inplace(x, target);
        const double err = std::abs(m.forward(x) - target);
        ASSERT_LE(err, prev) << "step " << i;
        prev = err;
    }
    EXPECT_LT(prev, 0.75);
}

TEST(Gradient, MatchesCentralDifferences) {
    Rng rng(8);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        std::vector<int> widths{1 + int(uniform_index(rng, 8))};
        const auto hidden = 1 + uniform_index(rng, 2);
        for (std::size_t h = 0; h < hidden; ++h) widths.push_back(1 + int(uniform_index(rng, 8)));
        widths.push_back(1);
        auto m = MlpApprox::random(widths, 0.01, rng);
        const auto x = random_input(rng, std::size_t(widths[0]));
        const double t = uniform_real(rng, -1.0, 1.0);
        const auto g = m.loss_gradient(x, t);
        const auto fd = fixtures::fd_gradient(widths, m.parameters(), x, t);
        for (std::size_t k = 0; k < g.size(); ++k)
            worst = std::max(worst, std::abs(fd[k] - g[k]) / std::max({std::abs(fd[k]), std::abs(g[k]), 1e-300}));
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(Mlp, JsonRoundTrip) {
    Rng rng(9);
    const auto m = MlpApprox::random({4, 5, 1}, 0.02, rng);
    const auto back = MlpApprox::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_EQ(back, m);
}

TEST(Tabular, DefaultsToZeroAndStores) {
    TabularApprox t(3);
    EXPECT_EQ(t.value({0, 1}, 2), 0.0);
    t.set({0, 1}, 2, 4.5);
    EXPECT_EQ(t.value({0, 1}, 2), 4.5);
    EXPECT_EQ(t.value({0, 1}, 1), 0.0);
    EXPECT_THROW(t.set({}, 3, 1.0), ArgumentError);
    EXPECT_EQ(TabularApprox::from_json(nlohmann::json::parse(t.to_json().dump())), t);
}

TEST(ValueApprox, TabularUpdateIsExact) {
    ValueApprox v{TabularApprox(2)};
    Observation s{{1, 0}, {}};
    v.update(s, 1, 0.25);
    EXPECT_EQ(v.value(s, 1), 0.25);
    EXPECT_EQ(v.value(s, 0), 0.0);
}

TEST(ValueApprox, MlpUpdateIsOneSgdStep) {
    Rng rng(10);
    auto m = MlpApprox::random({3 + 2, 4, 1}, 0.05, rng);
    ValueApprox v(m, 2);
    Observation s{{0}, {0.1, -0.2, 0.3}};
    v.update(s, 1, 1.0);
    const auto expect = m.sgd_step(std::vector<double>{0.1, -0.2, 0.3, 0.0, 1.0}, 1.0);
    EXPECT_EQ(v.mlp(), expect);
    EXPECT_EQ(ValueApprox::from_json(nlohmann::json::parse(v.to_json().dump())), v);
}
