#include "fixtures.hpp"
#include "zdam/codebook.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

namespace zdam {
namespace {

TEST(EvalModel, Affine) {
    RandomizedEncoder enc = make_encoder({{2.0, 0.0}, {0.0, 3.0}, {1.0, -1.0}}, 4);
    EXPECT_EQ(eval_model(enc, 0, 1.0), 2.0);
    EXPECT_EQ(eval_model(enc, 1, -7.5), 3.0);
    EXPECT_EQ(eval_model(enc, 2, 1.0), 0.0);
    EXPECT_THROW(eval_model(enc, 3, 1.0), std::out_of_range);
}

TEST(Harden, ArgmaxWithLowestIndexTieBreak) {
    Eigen::VectorXd x(2);
    x << 2.0, 1.0;
    RandomizedEncoder enc = make_encoder({{1.0, 0.0}, {-1.0, 0.0}}, 2);
    enc.assoc << 0.9, 0.1, 0.5, 0.5;
    const HardenedEncoder h = harden(enc, x);
    EXPECT_EQ(h.indices[0], 0u);
    EXPECT_EQ(h.values(0), 2.0);
    EXPECT_EQ(h.indices[1], 0u);
    EXPECT_EQ(h.values(1), 1.0);
}

TEST(Harden, CoincidentModelsGiveSameValues) {
    const Eigen::VectorXd x = uniform_grid(-1.0, 1.0, 5);
    RandomizedEncoder enc = make_encoder({{1.5, 0.2}, {1.5, 0.2}, {1.5, 0.2}}, 5);
    const HardenedEncoder h = harden(enc, x);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(h.values(i), 1.5 * x(i) + 0.2);
}

TEST(Harden, Idempotent) {
    std::mt19937_64 rng(3);
    const Eigen::VectorXd x = uniform_grid(-3.0, 3.0, 20);
    const RandomizedEncoder hard = harden_in_place(testing::random_encoder(4, 20, rng));
    const HardenedEncoder a = harden(hard, x);
    const HardenedEncoder b = harden(harden_in_place(hard), x);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.indices, b.indices);
}

TEST(EncoderPower, LinearMaps) {
    const SourceModel s = build_source_model(0.995, 1.0, 1.0, 64, 5.0);
    EXPECT_NEAR(encoder_power(testing::linear_encoder(1.0, 0.0, 64), s.x_grid_1, s.q_marg_1), 1.0,
                0.005);
    EXPECT_NEAR(encoder_power(testing::linear_encoder(2.0, 0.0, 64), s.x_grid_1, s.q_marg_1), 4.0,
                0.02);
    EXPECT_EQ(encoder_power(testing::linear_encoder(0.0, 0.0, 64), s.x_grid_1, s.q_marg_1), 0.0);
    EXPECT_THROW(encoder_power(testing::linear_encoder(1.0, 0.0, 32), s.x_grid_1, s.q_marg_1),
                 std::invalid_argument);
}

TEST(EncoderPower, OneHotEqualsHardenedMap) {
    std::mt19937_64 rng(11);
    const SourceModel s = build_source_model(0.9, 1.0, 1.0, 48, 5.0);
    const RandomizedEncoder hard = harden_in_place(testing::random_encoder(4, 48, rng));
    const HardenedEncoder h = harden(hard, s.x_grid_1);
    const double direct = s.q_marg_1.dot(h.values.cwiseAbs2());
    EXPECT_NEAR(encoder_power(hard, s.x_grid_1, s.q_marg_1), direct, 1e-12);
}

DecoderTable table_from(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2, auto&& f) {
    DecoderTable t;
    t.grid.y_grid_1 = y1;
    t.grid.y_grid_2 = y2;
    t.xhat1.resize(y1.size(), y2.size());
    t.xhat2.resize(y1.size(), y2.size());
    for (Eigen::Index i = 0; i < y1.size(); ++i) {
        for (Eigen::Index j = 0; j < y2.size(); ++j) {
            t.xhat1(i, j) = f(y1(i), y2(j));
            t.xhat2(i, j) = -f(y1(i), y2(j));
        }
    }
    return t;
}

TEST(Decode, InterpolatesAndClamps) {
    const Eigen::VectorXd y = uniform_grid(-2.0, 2.0, 17);
    const DecoderTable t = table_from(y, y, [](double a, double b) { return a * a + 3.0 * b; });
    for (Eigen::Index i = 0; i < 17; i += 3) {
        for (Eigen::Index j = 0; j < 17; j += 5) {
            const auto [v1, v2] = decode(t, y(i), y(j));
            EXPECT_NEAR(v1, t.xhat1(i, j), 1e-12);
            EXPECT_NEAR(v2, t.xhat2(i, j), 1e-12);
        }
    }
    // Beyond the top edge in y1: clamped coordinate.
    const auto [c1, c2] = decode(t, 10.0, y(4));
    EXPECT_NEAR(c1, t.xhat1(16, 4), 1e-12);
    EXPECT_NEAR(c2, t.xhat2(16, 4), 1e-12);
    const auto [d1, d2] = decode(t, -10.0, -10.0);
    EXPECT_NEAR(d1, t.xhat1(0, 0), 1e-12);
    (void)d2;

    const DecoderTable flat = table_from(y, y, [](double, double) { return 0.75; });
    const auto [m1, m2] = decode(flat, 0.5 * (y(3) + y(4)), 0.5 * (y(9) + y(10)));
    EXPECT_NEAR(m1, 0.75, 1e-15);
    EXPECT_NEAR(m2, -0.75, 1e-15);
}

TEST(Decode, RefinementConverges) {
    auto f = [](double a, double b) { return std::sin(a) * std::cos(0.5 * b); };
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<std::pair<double, double>> probes;
    for (int i = 0; i < 200; ++i) probes.emplace_back(u(rng), u(rng));
    double previous = 1.0;
    for (std::size_t n : {17, 33, 65, 129}) {
        const Eigen::VectorXd y = uniform_grid(-3.0, 3.0, n);
        const DecoderTable t = table_from(y, y, f);
        double err = 0.0;
        for (auto [a, b] : probes) err = std::max(err, std::abs(decode(t, a, b).first - f(a, b)));
        EXPECT_LE(err, previous / 2.0) << "n_y=" << n;
        previous = err;
    }
}

}  // namespace
}  // namespace zdam
