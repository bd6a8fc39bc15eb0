#include "zdam/config.hpp"
#include "zdam/error.hpp"
#include "zdam/harness.hpp"
#include "zdam/mapping_io.hpp"
#include "zdam/monte_carlo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace zdam {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("zdam_test_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig fast_greedy() {
    return parse_config(R"(
[source]
n_x = 24
[grid]
n_y = 40
[method]
name = greedy
[greedy]
init = linear
max_sweeps = 30
tol = 1e-5
[mc]
samples = 20000
)");
}

TEST(Metrics, DecibelExamples) {
    EXPECT_NEAR(snr_db(0.02), 16.9897, 1e-4);
    EXPECT_NEAR(csnr_db(4.0, 4.94, 0.1), 19.5134, 1e-4);
    EXPECT_NEAR(snr_db(1.0), 0.0, 1e-15);
}

TEST(Config, DefaultsAndPrecedence) {
    const ExperimentConfig d = load_config("");
    EXPECT_EQ(d.n_y, 128u);
    EXPECT_EQ(d.method, Method::DA);
    EXPECT_DOUBLE_EQ(d.source.rho, 0.995);

    const fs::path dir = scratch_dir("config");
    fs::create_directories(dir);
    const fs::path file = dir / "c.ini";
    std::ofstream(file) << "[grid]\nn_y = 64\n[noise]\nvar = 0.2\n";
    const ExperimentConfig c = load_config(file.string(), {"grid.n_y=80"});
    EXPECT_EQ(c.n_y, 80u);
    EXPECT_DOUBLE_EQ(c.noise_var, 0.2);
    EXPECT_EQ(c.n_x, 64u);
    EXPECT_EQ(c.anneal.n_y, 80u);
    EXPECT_EQ(c.greedy.n_y, 80u);
}

TEST(Config, UnknownOrMalformedEntriesRejected) {
    EXPECT_THROW(parse_config("[grid]\nnodes = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("[gridd]\nn_y = 64\n"), ConfigError);
    EXPECT_THROW(parse_config("", {"grid.n_y"}), ConfigError);
    EXPECT_THROW(parse_config("", {"method.name=sgd"}), ConfigError);
    EXPECT_THROW(parse_config("", {"source.rho=1.0"}), ConfigError);
    EXPECT_THROW(parse_config("", {"anneal.alpha=1.5"}), ConfigError);
    EXPECT_THROW(parse_config("", {"grid.n_y=lots"}), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/zdam.ini"), ConfigError);
}

TEST(Config, RenderRoundTrip) {
    ExperimentConfig c = parse_config("", {"weights.mode=individual", "weights.lambda1=0.3",
                                           "sweep.lambdas=0.01, 0.1, 1", "anneal.K1=6",
                                           "run.out=/tmp/x"});
    const std::string text = render_config(c);
    const ExperimentConfig back = parse_config(text);
    EXPECT_EQ(render_config(back), text);
    EXPECT_EQ(back.weights_mode, WeightsMode::Individual);
    EXPECT_DOUBLE_EQ(back.lambda1, 0.3);
    EXPECT_EQ(back.sweep_lambdas, (std::vector<double>{0.01, 0.1, 1.0}));
    EXPECT_EQ(back.anneal.K1, 6u);
}

TEST(BisectWeights, TotalTargetReached) {
    ExperimentConfig c = load_config("", {"weights.mode=target", "weights.target_total=2"});
    std::size_t calls = 0;
    const WeightSearch ws = bisect_weights(c, [&](const LagrangeWeights& w) {
        ++calls;
        EXPECT_EQ(w.lambda1, w.lambda2);
        return std::pair<double, double>{0.5 / w.lambda1, 0.5 / w.lambda2};
    });
    EXPECT_TRUE(ws.converged);
    EXPECT_EQ(ws.iterations, calls);
    EXPECT_NEAR(ws.P1 + ws.P2, 2.0, 2.0 * c.bisect_tol);
    EXPECT_NEAR(ws.weights.lambda1, 0.5, 0.5 * 0.03);
}

TEST(BisectWeights, IndividualTargetsReached) {
    ExperimentConfig c = load_config(
        "", {"weights.mode=target", "weights.target_p1=2", "weights.target_p2=4"});
    const WeightSearch ws = bisect_weights(c, [](const LagrangeWeights& w) {
        return std::pair<double, double>{1.0 / w.lambda1, 2.0 / std::sqrt(w.lambda2)};
    });
    EXPECT_TRUE(ws.converged);
    EXPECT_NEAR(ws.P1, 2.0, 2.0 * c.bisect_tol);
    EXPECT_NEAR(ws.P2, 4.0, 4.0 * c.bisect_tol);
}

TEST(BisectWeights, UnreachableTargetFlagged) {
    ExperimentConfig c = load_config(
        "", {"weights.mode=target", "weights.target_total=1", "weights.bisect_iters=7"});
    const WeightSearch ws = bisect_weights(c, [](const LagrangeWeights& w) {
        return std::pair<double, double>{2.5 + 1e-3 * w.lambda1, 2.5};
    });
    EXPECT_FALSE(ws.converged);
    EXPECT_EQ(ws.iterations, 7u);
    // Power grows with the weight here, so the first (smallest) iterate stays closest.
    EXPECT_NEAR(ws.weights.lambda1, std::sqrt(c.bisect_lo * c.bisect_hi), 1e-12);
}

DecoderTable linear_decoder(double gain, double half_width, Eigen::Index n) {
    DecoderTable d;
    d.grid.y_grid_1 = Eigen::VectorXd::LinSpaced(n, -half_width, half_width);
    d.grid.y_grid_2 = d.grid.y_grid_1;
    d.xhat1.resize(n, n);
    d.xhat2.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            d.xhat1(i, j) = gain * d.grid.y_grid_1(i);
            d.xhat2(i, j) = gain * d.grid.y_grid_2(j);
        }
    }
    return d;
}

TEST(MonteCarlo, IdentityEncodersWithScalarWienerDecoder) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(2001, -6.0, 6.0);
    const GridEncoder id{x};
    const DecoderTable d = linear_decoder(1.0 / 1.1, 12.0, 64);
    const McResult r = monte_carlo_validate(id, x, id, x, d, {0.0, 1.0, 1.0}, 0.1, 0.1, 200000, 5);
    const double exact = 2.0 * 0.1 / 1.1;
    EXPECT_NEAR(r.D, exact, 3.0 * r.stderr_D + 1e-4);
    EXPECT_NEAR(r.P1, 1.0, 0.02);
    EXPECT_NEAR(r.P2, 1.0, 0.02);
    EXPECT_EQ(r.samples, 200000u);
}

TEST(MonteCarlo, ZeroEncodersGiveSourceVariance) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(65, -5.0, 5.0);
    const GridEncoder zero{Eigen::VectorXd::Zero(65)};
    const DecoderTable d = linear_decoder(0.0, 3.0, 16);
    const McResult r =
        monte_carlo_validate(zero, x, zero, x, d, {0.9, 1.0, 1.0}, 0.1, 0.1, 100000, 11);
    EXPECT_NEAR(r.D, 2.0, 3.0 * r.stderr_D);
    EXPECT_EQ(r.P1, 0.0);
    EXPECT_EQ(r.P2, 0.0);
}

TEST(MonteCarlo, SeededAndGuarded) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(33, -5.0, 5.0);
    const GridEncoder id{x};
    const DecoderTable d = linear_decoder(0.9, 8.0, 32);
    const McResult a = monte_carlo_validate(id, x, id, x, d, {0.5, 1.0, 1.0}, 0.1, 0.1, 20000, 3);
    const McResult b = monte_carlo_validate(id, x, id, x, d, {0.5, 1.0, 1.0}, 0.1, 0.1, 20000, 3);
    EXPECT_EQ(a.D, b.D);
    EXPECT_EQ(a.P1, b.P1);
    EXPECT_THROW(monte_carlo_validate(id, x, id, x, d, {0.5, 1.0, 1.0}, 0.1, 0.1, 9999, 3),
                 ConfigError);
}

TEST(NearestNode, ClampsAndRounds) {
    const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
    EXPECT_EQ(nearest_node(g, -3.0), 0);
    EXPECT_EQ(nearest_node(g, 1.4), 1);
    EXPECT_EQ(nearest_node(g, 1.6), 2);
    EXPECT_EQ(nearest_node(g, 9.0), 4);
}

TEST(Mapping, JsonRoundTripAndCsv) {
    const ExperimentConfig c = fast_greedy();
    const MethodOutcome o = run_method(c, LagrangeWeights::total(0.05), 1);
    MappingState s;
    const Problem p = make_problem(c, {});
    s.x_grid_1 = p.source.x_grid_1;
    s.x_grid_2 = p.source.x_grid_2;
    s.enc1 = o.enc1;
    s.enc2 = o.enc2;
    s.model1 = make_encoder({{1.0, 0.5}, {-2.0, 0.0}}, 24);
    s.decoder = o.decoder;

    const fs::path dir = scratch_dir("mapping");
    fs::create_directories(dir);
    dump_mapping(s, (dir / "m.json").string());
    const MappingState back = load_mapping((dir / "m.json").string());
    EXPECT_EQ(back.enc1.values, s.enc1.values);
    EXPECT_EQ(back.enc2.values, s.enc2.values);
    EXPECT_EQ(back.decoder.xhat1, s.decoder.xhat1);
    EXPECT_EQ(back.decoder.grid.y_grid_2, s.decoder.grid.y_grid_2);
    ASSERT_TRUE(back.model1.has_value());
    EXPECT_FALSE(back.model2.has_value());
    EXPECT_EQ(back.model1->models[1].a, -2.0);
    EXPECT_EQ(back.model1->assoc, s.model1->assoc);

    dump_mapping_csv(s, (dir / "m.csv").string());
    std::ifstream in(dir / "m.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x1,g1,x2,g2");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 24u);

    EXPECT_THROW(load_mapping((dir / "missing.json").string()), std::runtime_error);
}

TEST(Mapping, CsvOfLinearEncoderIsAffine) {
    MappingState s;
    s.x_grid_1 = Eigen::VectorXd::LinSpaced(9, -2.0, 2.0);
    s.x_grid_2 = s.x_grid_1;
    s.enc1.values = 3.0 * s.x_grid_1.array() + 1.0;
    s.enc2.values = -s.x_grid_1;
    s.decoder = linear_decoder(1.0, 4.0, 4);
    const fs::path dir = scratch_dir("affine");
    fs::create_directories(dir);
    dump_mapping_csv(s, (dir / "a.csv").string());
    std::ifstream in(dir / "a.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        double x1, g1, x2, g2;
        char c;
        std::istringstream row(line);
        row >> x1 >> c >> g1 >> c >> x2 >> c >> g2;
        EXPECT_NEAR(g1, 3.0 * x1 + 1.0, 1e-14);
        EXPECT_NEAR(g2, -x2, 1e-14);
    }
}

TEST(Execute, SummaryDeterministicAndFinite) {
    const ExperimentConfig c = fast_greedy();
    const Execution a = execute(c, 4);
    const Execution b = execute(c, 4);
    EXPECT_EQ(summary_json(a.result), summary_json(b.result));
    for (double v : {a.result.D, a.result.P1, a.result.P2, a.result.J, a.result.snr_db,
                     a.result.csnr_db, a.result.mc.D}) {
        EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_DOUBLE_EQ(a.result.J, a.result.D + 0.02 * (a.result.P1 + a.result.P2));
}

TEST(Run, WritesResultFiles) {
    ExperimentConfig c = fast_greedy();
    const fs::path dir = scratch_dir("run");
    const RunResult r = run(c, dir.string());
    for (const char* f : {"summary.json", "mapping.json", "mapping.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_FALSE(fs::exists(dir / "anneal.csv"));
    EXPECT_EQ(r.mapping_file, "mapping.json");
}

TEST(Sweep, EmptyListIsConfigError) {
    EXPECT_THROW(sweep(fast_greedy(), scratch_dir("empty").string()), ConfigError);
}

TEST(Sweep, SinglePointMatchesRun) {
    ExperimentConfig c = fast_greedy();
    c.lambda = 0.07;
    c.sweep_lambdas = {0.07};
    const fs::path dir = scratch_dir("single");
    const std::vector<RunResult> rows = sweep(c, dir.string());
    const RunResult r = run(c, (dir / "direct").string());
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(summary_json(rows[0]), summary_json(r));
    EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
    EXPECT_TRUE(fs::exists(dir / "point_0" / "summary.json"));
}

TEST(Sweep, PowerFallsAsWeightGrows) {
    ExperimentConfig c = fast_greedy();
    c.sweep_lambdas = {0.01, 0.1, 1.0};
    const fs::path dir = scratch_dir("monotone");
    const std::vector<RunResult> rows = sweep(c, dir.string());
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].P1 + rows[i].P2, rows[i - 1].P1 + rows[i - 1].P2);
        EXPECT_GT(rows[i].D, rows[i - 1].D);
    }
    std::ifstream in(dir / "sweep.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "lambda1,lambda2,P1,P2,CSNR_dB,SNR_dB,method,converged");
}

TEST(Execute, TargetModeHitsTotalPower) {
    ExperimentConfig c = fast_greedy();
    c.weights_mode = WeightsMode::Target;
    c.target_total = 3.0;
    c.bisect_tol = 0.05;
    const Execution ex = execute(c, 1);
    ASSERT_TRUE(ex.result.weights_converged);
    EXPECT_NEAR(ex.result.P1 + ex.result.P2, 3.0, 3.0 * 0.05);
    EXPECT_EQ(ex.result.lambda1, ex.result.lambda2);
}

}  // namespace
}  // namespace zdam
