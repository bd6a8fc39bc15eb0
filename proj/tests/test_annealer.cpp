#include "fixtures.hpp"
#include "zdam/annealer.hpp"
#include "zdam/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace zdam {
namespace {

Problem small_problem(double rho, double lambda) {
    return {build_source_model(rho, 1.0, 1.0, 24, 5.0), build_noise_model(0.1, 9, 4.0),
            build_noise_model(0.1, 9, 4.0), LagrangeWeights::total(lambda)};
}

AnnealConfig quick_config() {
    AnnealConfig c;
    c.n_y = 40;
    c.alpha = 0.6;
    c.t_min_ratio = 1e-3;
    c.inner_max_iters = 8;
    c.gd_max_iters = 3;
    c.zero_max_sweeps = 20;
    return c;
}

TEST(InitState, CoincidentModelsUniformAssociations) {
    const SourceModel s = build_source_model(0.9, 1.0, 1.0, 16, 5.0);
    AnnealConfig c;
    c.p_target1 = 4.0;
    const EncoderPair st = init_state(c, s);
    ASSERT_EQ(st.enc1.num_models(), 4u);
    for (const AffineModel& m : st.enc1.models) {
        EXPECT_DOUBLE_EQ(m.a, 2.0);
        EXPECT_EQ(m.b, 0.0);
    }
    for (const AffineModel& m : st.enc2.models) EXPECT_DOUBLE_EQ(m.a, 1.0);
    EXPECT_TRUE((st.enc1.assoc.array() == 0.25).all());
    EXPECT_NEAR(association_entropy(st.enc1.assoc, s.q_marg_1), std::log(4.0), 1e-12);
    EXPECT_EQ(cluster_count(st.enc1, 0.05), 1u);
}

TEST(Perturb, ZeroEpsIsIdentity) {
    std::mt19937_64 rng(1);
    const RandomizedEncoder e = make_encoder({{1.0, 0.0}, {1.0, 0.0}}, 4);
    const RandomizedEncoder p = perturb(e, 0.0, 1.0, rng);
    EXPECT_EQ(p.models[0].a, 1.0);
    EXPECT_EQ(p.models[1].b, 0.0);
}

TEST(Perturb, SeededAndSplitsCoincidentModels) {
    const RandomizedEncoder e = make_encoder(std::vector<AffineModel>(4, {1.5, 0.0}), 4);
    std::mt19937_64 r1(42);
    std::mt19937_64 r2(42);
    const RandomizedEncoder a = perturb(e, 0.01, 1.0, r1);
    const RandomizedEncoder b = perturb(e, 0.01, 1.0, r2);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(a.models[k].a, b.models[k].a);
        EXPECT_EQ(a.models[k].b, b.models[k].b);
        EXPECT_LE(std::abs(a.models[k].a - 1.5), 0.01 * 1.5);
        EXPECT_LE(std::abs(a.models[k].b), 0.01);
        for (std::size_t j = 0; j < k; ++j) EXPECT_NE(a.models[k].a, a.models[j].a);
    }
}

TEST(ClusterCount, Examples) {
    EXPECT_EQ(cluster_count(make_encoder(std::vector<AffineModel>(3, {1.0, 0.0}), 2), 0.01), 1u);
    EXPECT_EQ(cluster_count(make_encoder({{1.0, 0.0}, {1.0, 10.0}}, 2), 0.01), 2u);
    EXPECT_EQ(cluster_count(make_encoder({{1.0, 0.0}, {2.0, 1.0}, {1.0, 0.0}, {2.0, 1.0}}, 2), 0.01),
              2u);
    // Single linkage chains close neighbours together.
    EXPECT_EQ(cluster_count(make_encoder({{1.0, 0.0}, {1.04, 0.0}, {1.08, 0.0}}, 2), 0.05), 1u);
    // The offset distance is measured in source standard deviations.
    EXPECT_EQ(cluster_count(make_encoder({{1.0, 0.0}, {1.0, 0.3}}, 2), 0.05, 10.0), 1u);
}

TEST(Gradient, PowerTermFiniteDifferencesMatchAnalytic) {
    const SourceModel s = build_source_model(0.9, 1.0, 1.0, 32, 5.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int probes = 0;
    while (probes < 100) {
        RandomizedEncoder enc = testing::random_encoder(4, 32, rng);
        for (AffineModel& m : enc.models) m = {u(rng), u(rng)};
        const EncoderView view = view_of(enc, s.x_grid_1);
        const ColumnCost power = [&](Eigen::Index k, const Eigen::VectorXd& col) {
            EncoderView v = view;
            v.inputs.col(k) = col;
            return power_of(v, s.q_marg_1);
        };
        const Eigen::VectorXd fd = finite_difference_gradient(enc, s.x_grid_1, power);
        const Eigen::VectorXd an = power_gradient(enc, s.x_grid_1, s.q_marg_1);
        for (Eigen::Index p = 0; p < fd.size() && probes < 100; ++p, ++probes) {
            EXPECT_LE(std::abs(fd(p) - an(p)), 1e-6 * std::max(std::abs(an(p)), 1e-3))
                << "parameter " << p;
        }
    }
}

TEST(DescendModels, NeverRaisesCost) {
    const Problem p = small_problem(0.995, 0.02);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        RandomizedEncoder e1 = testing::random_encoder(3, 24, rng);
        const RandomizedEncoder e2 = testing::random_encoder(2, 24, rng);
        const EncoderView v1 = view_of(e1, p.source.x_grid_1);
        const EncoderView v2 = view_of(e2, p.source.x_grid_2);
        const OutputGrid g = covering_grid(p, v1, v2, 40, 0.1);
        const DecoderTable d = compute_decoder(p, v1, v2, g);
        const SideCost c(p.source, p.noise1, p.noise2, d, v2, Side::First, 0.02);
        const DescentResult r = descend_models(c, e1, p.source.x_grid_1, {});
        EXPECT_LE(r.f_after, r.f_before);
        EXPECT_DOUBLE_EQ(r.f_after, c.value(view_of(e1, p.source.x_grid_1)));
    }
}

TEST(DescendModels, StationaryPointFoundByBruteForceStaysPut) {
    // K = 1, fixed decoder: locate the minimizing (a, b) by nested golden search.
    const Problem p = small_problem(0.5, 0.1);
    const RandomizedEncoder other = testing::linear_encoder(1.0, 0.0, 24);
    const EncoderView v2 = view_of(other, p.source.x_grid_2);
    const OutputGrid g = covering_grid(p, v2, v2, 40, 0.3);
    const DecoderTable d = compute_decoder(p, v2, v2, g);
    const SideCost c(p.source, p.noise1, p.noise2, d, v2, Side::First, 0.1);
    const auto f = [&](double a, double b) {
        return c.value(view_of(testing::linear_encoder(a, b, 24), p.source.x_grid_1));
    };
    const auto golden = [](auto&& fn, double lo, double hi) {
        constexpr double r = 0.6180339887498949;
        double x1 = hi - r * (hi - lo);
        double x2 = lo + r * (hi - lo);
        double f1 = fn(x1);
        double f2 = fn(x2);
        for (int i = 0; i < 80; ++i) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = fn(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = fn(x2);
            }
        }
        return 0.5 * (lo + hi);
    };
    double a = 1.0;
    double b = 0.0;
    for (int sweep = 0; sweep < 6; ++sweep) {
        a = golden([&](double t) { return f(t, b); }, 0.2, 2.0);
        b = golden([&](double t) { return f(a, t); }, -1.0, 1.0);
    }
    RandomizedEncoder enc = testing::linear_encoder(a, b, 24);
    descend_models(c, enc, p.source.x_grid_1, {});
    EXPECT_LT(std::abs(enc.models[0].a - a), 1e-6);
    EXPECT_LT(std::abs(enc.models[0].b - b), 1e-6);
}

TEST(Anneal, InvalidConfigRejectedUpFront) {
    const Problem p = small_problem(0.9, 0.1);
    AnnealConfig c = quick_config();
    c.alpha = 1.0;
    EXPECT_THROW(anneal(c, p), ConfigError);
    c = quick_config();
    c.T_init = 1.0;
    c.T_min = 2.0;
    EXPECT_THROW(anneal(c, p), ConfigError);
    c = quick_config();
    c.perturb_eps = 0.0;
    EXPECT_THROW(anneal(c, p), ConfigError);
}

TEST(Anneal, HighTemperatureKeepsAssociationsUniform) {
    const Problem p = small_problem(0.995, 0.05);
    AnnealConfig c = quick_config();
    c.t_init_scale = 1e6;
    c.t_min_ratio = 0.5;
    c.alpha = 0.4;  // a single temperature
    c.zero_temperature = false;
    const AnnealResult r = anneal(c, p);
    ASSERT_EQ(r.report.records.size(), 1u);
    EXPECT_NEAR(r.report.records[0].cost.H, 2.0 * std::log(4.0), 1e-6);
    // Hardening removes every bit of association entropy.
    EXPECT_EQ(r.report.hardened.H, 0.0);
}

TEST(Anneal, FreeEnergyMonotoneWithinEachTemperature) {
    const Problem p = small_problem(0.995, 0.03);
    AnnealConfig c = quick_config();
    std::size_t calls = 0;
    double previous_T = std::numeric_limits<double>::infinity();
    const AnnealResult r = anneal(c, p, [&](const AnnealRecord& rec) {
        ++calls;
        EXPECT_LT(rec.T, previous_T);
        previous_T = rec.T;
        EXPECT_GE(rec.clusters1, 1u);
        EXPECT_LE(rec.clusters1, c.K1);
        for (std::size_t i = 1; i < rec.f_trace.size(); ++i) {
            EXPECT_LE(rec.f_trace[i], rec.f_trace[i - 1] + 1e-9 * std::abs(rec.f_trace[i - 1]))
                << "T=" << rec.T << " step " << i;
        }
    });
    EXPECT_EQ(calls, r.report.records.size());
    EXPECT_GE(r.report.records.front().cost.H, r.report.records.back().cost.H);
    EXPECT_EQ(r.report.final_cost.H, 0.0);
}

TEST(Anneal, Deterministic) {
    const Problem p = small_problem(0.995, 0.03);
    const AnnealConfig c = quick_config();
    const AnnealResult a = anneal(c, p);
    const AnnealResult b = anneal(c, p);
    ASSERT_EQ(a.report.records.size(), b.report.records.size());
    for (std::size_t i = 0; i < a.report.records.size(); ++i) {
        EXPECT_EQ(a.report.records[i].cost.F, b.report.records[i].cost.F);
        EXPECT_EQ(a.report.records[i].f_trace, b.report.records[i].f_trace);
    }
    EXPECT_EQ(a.enc1.values, b.enc1.values);
    EXPECT_EQ(a.report.final_cost.J, b.report.final_cost.J);
}

TEST(ZeroTemperature, FixedPointOfGreedySolution) {
    const Problem p = small_problem(0.995, 0.03);
    AnnealConfig c = quick_config();
    GreedyOptions g;
    g.n_y = c.n_y;
    g.tol = c.zero_tol;
    g.max_sweeps = 300;
    const GreedyResult base =
        greedy_descend(random_grid_encoder(p.source.x_grid_1, 1.0, 1.0, 3),
                       random_grid_encoder(p.source.x_grid_2, 1.0, 1.0, 4), p, g);
    ASSERT_TRUE(base.converged);
    const GreedyResult z =
        zero_temperature_phase(base.enc1, base.enc2, p, c, &base.decoder.grid);
    EXPECT_LE(std::abs(z.cost.J - base.cost.J), 1e-5 * base.cost.J);
}

TEST(ToGridEncoder, SamplesHardenedModels) {
    const Eigen::VectorXd x = uniform_grid(-1.0, 1.0, 3);
    RandomizedEncoder e = make_encoder({{1.0, 0.0}, {-1.0, 5.0}}, 3);
    e.assoc << 1.0, 0.0, 0.2, 0.8, 0.5, 0.5;
    const GridEncoder g = to_grid_encoder(e, x);
    EXPECT_EQ(g.values(0), -1.0);
    EXPECT_EQ(g.values(1), 5.0);
    EXPECT_EQ(g.values(2), 1.0);
}

}  // namespace
}  // namespace zdam
