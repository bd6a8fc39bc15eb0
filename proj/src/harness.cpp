#include "zdam/harness.hpp"

#include "zdam/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

namespace zdam {

namespace fs = std::filesystem;
using nlohmann::json;

double snr_db(double D) { return 10.0 * std::log10(1.0 / D); }

double csnr_db(double P1, double P2, double noise_var) {
    return 10.0 * std::log10((P1 + P2) / noise_var);
}

Problem make_problem(const ExperimentConfig& c, const LagrangeWeights& weights) {
    Problem p{build_source_model(c.source.rho, c.source.var1, c.source.var2, c.n_x, c.x_span),
              build_noise_model(c.noise_var, c.n_n, c.noise_span),
              build_noise_model(c.noise_var, c.n_n, c.noise_span), weights};
    return p;
}

namespace {

constexpr std::uint64_t kSecondSideSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kMonteCarloSalt = 0xC2B2AE3D27D4EB4FULL;

std::pair<GridEncoder, GridEncoder> greedy_start(const ExperimentConfig& c, const Problem& p,
                                                 std::uint64_t seed) {
    const SourceModel& s = p.source;
    if (c.greedy_init == "linear") {
        return {linear_grid_encoder(s.x_grid_1, 1.0), linear_grid_encoder(s.x_grid_2, 1.0)};
    }
    return {random_grid_encoder(s.x_grid_1, s.var1, s.var1, seed),
            random_grid_encoder(s.x_grid_2, s.var2, s.var2, seed ^ kSecondSideSalt)};
}

MethodOutcome from_greedy(GreedyResult g) {
    MethodOutcome o;
    o.enc1 = std::move(g.enc1);
    o.enc2 = std::move(g.enc2);
    o.decoder = std::move(g.decoder);
    o.cost = g.cost;
    o.converged = g.converged;
    return o;
}

}  // namespace

MethodOutcome run_method(const ExperimentConfig& c, const LagrangeWeights& weights,
                         std::uint64_t seed, const RecordCallback& on_record) {
    const Problem problem = make_problem(c, weights);
    switch (c.method) {
        case Method::DA: {
            AnnealConfig ac = c.anneal;
            ac.rng_seed = seed;
            AnnealResult r = anneal(ac, problem, on_record);
            MethodOutcome o;
            o.enc1 = std::move(r.enc1);
            o.enc2 = std::move(r.enc2);
            o.model1 = std::move(r.model1);
            o.model2 = std::move(r.model2);
            o.decoder = std::move(r.decoder);
            o.cost = r.report.final_cost;
            o.report = std::move(r.report);
            return o;
        }
        case Method::Greedy: {
            auto [e1, e2] = greedy_start(c, problem, seed);
            return from_greedy(greedy_descend(e1, e2, problem, c.greedy));
        }
        case Method::Ncr: {
            auto [e1, e2] = greedy_start(c, problem, seed);
            return from_greedy(ncr(c.ncr, problem, e1, e2, c.greedy));
        }
    }
    throw ConfigError("unknown method");
}

WeightSearch bisect_weights(
    const ExperimentConfig& c,
    const std::function<std::pair<double, double>(const LagrangeWeights&)>& powers) {
    const bool total = c.target_total > 0.0;
    double lo1 = std::log(c.bisect_lo), hi1 = std::log(c.bisect_hi);
    double lo2 = lo1, hi2 = hi1;

    WeightSearch best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < c.bisect_iters; ++it) {
        const double l1 = std::exp(0.5 * (lo1 + hi1));
        const double l2 = total ? l1 : std::exp(0.5 * (lo2 + hi2));
        const LagrangeWeights w{l1, l2};
        const auto [p1, p2] = powers(w);
        double err = 0.0;
        if (total) {
            err = std::abs(p1 + p2 - c.target_total) / c.target_total;
            (p1 + p2 > c.target_total ? lo1 : hi1) = std::log(l1);
        } else {
            err = std::max(std::abs(p1 - c.target_p1) / c.target_p1,
                           std::abs(p2 - c.target_p2) / c.target_p2);
            (p1 > c.target_p1 ? lo1 : hi1) = std::log(l1);
            (p2 > c.target_p2 ? lo2 : hi2) = std::log(l2);
        }
        if (err < best_err) {
            best_err = err;
            best = {w, p1, p2, false, it + 1};
        }
        best.iterations = it + 1;
        if (err <= c.bisect_tol) {
            best.converged = true;
            break;
        }
    }
    return best;
}

Execution execute(const ExperimentConfig& c, std::uint64_t seed, const RecordCallback& on_record) {
    c.validate();
    Execution ex;
    RunResult& r = ex.result;
    r.method = to_string(c.method);
    r.seed = seed;

    if (c.weights_mode == WeightsMode::Target) {
        ExperimentConfig tuned = c;
        if (c.target_total > 0.0) {
            tuned.anneal.p_target1 = tuned.anneal.p_target2 = 0.5 * c.target_total;
        } else {
            tuned.anneal.p_target1 = c.target_p1;
            tuned.anneal.p_target2 = c.target_p2;
        }
        // Keep the outcome of whichever iterate the search settles on.
        std::vector<std::pair<LagrangeWeights, MethodOutcome>> seen;
        const WeightSearch ws = bisect_weights(tuned, [&](const LagrangeWeights& w) {
            MethodOutcome o = run_method(tuned, w, seed);
            const std::pair<double, double> p{o.cost.P1, o.cost.P2};
            seen.emplace_back(w, std::move(o));
            return p;
        });
        for (auto& [w, o] : seen) {
            if (w.lambda1 == ws.weights.lambda1 && w.lambda2 == ws.weights.lambda2) {
                ex.outcome = std::move(o);
            }
        }
        r.weights_converged = ws.converged;
        r.weight_iterations = ws.iterations;
        r.lambda1 = ws.weights.lambda1;
        r.lambda2 = ws.weights.lambda2;
    } else {
        const LagrangeWeights w = c.weights_mode == WeightsMode::Total
                                      ? LagrangeWeights::total(c.lambda)
                                      : LagrangeWeights{c.lambda1, c.lambda2};
        ex.outcome = run_method(c, w, seed, on_record);
        r.lambda1 = w.lambda1;
        r.lambda2 = w.lambda2;
    }

    const MethodOutcome& o = ex.outcome;
    r.D = o.cost.D;
    r.P1 = o.cost.P1;
    r.P2 = o.cost.P2;
    r.J = o.cost.J;
    r.snr_db = snr_db(r.D);
    r.csnr_db = csnr_db(r.P1, r.P2, c.noise_var);
    r.converged = o.converged;

    const Problem p = make_problem(c, {r.lambda1, r.lambda2});
    r.mc = monte_carlo_validate(o.enc1, p.source.x_grid_1, o.enc2, p.source.x_grid_2, o.decoder,
                                c.source, c.noise_var, c.noise_var, c.mc_samples,
                                seed ^ kMonteCarloSalt);
    r.mc_within_3se = std::abs(r.D - r.mc.D) <= 3.0 * r.mc.stderr_D;
    return ex;
}

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

MappingState mapping_of(const ExperimentConfig& c, const MethodOutcome& o) {
    const Problem p = make_problem(c, {});
    MappingState s;
    s.x_grid_1 = p.source.x_grid_1;
    s.x_grid_2 = p.source.x_grid_2;
    s.enc1 = o.enc1;
    s.enc2 = o.enc2;
    s.model1 = o.model1;
    s.model2 = o.model2;
    s.decoder = o.decoder;
    return s;
}

}  // namespace

RunResult run(const ExperimentConfig& c, const std::string& out_dir) {
    ensure_dir(out_dir);
    Execution ex = execute(c, c.seed);
    const MappingState state = mapping_of(c, ex.outcome);
    ex.result.mapping_file = "mapping.json";
    dump_mapping(state, (fs::path(out_dir) / "mapping.json").string());
    dump_mapping_csv(state, (fs::path(out_dir) / "mapping.csv").string());
    if (ex.outcome.report) {
        ex.result.anneal_file = "anneal.csv";
        write_anneal_csv(*ex.outcome.report, (fs::path(out_dir) / "anneal.csv").string());
    }
    write_summary(ex.result, (fs::path(out_dir) / "summary.json").string());
    return ex.result;
}

std::vector<RunResult> sweep(const ExperimentConfig& c, const std::string& out_dir) {
    if (c.sweep_lambdas.empty() && c.sweep_targets.empty()) {
        throw ConfigError("sweep: no lambdas or power targets given");
    }
    const bool by_lambda = !c.sweep_lambdas.empty();
    const std::vector<double>& points = by_lambda ? c.sweep_lambdas : c.sweep_targets;
    std::vector<RunResult> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        ExperimentConfig pc = c;
        pc.seed = c.seed + i;
        pc.anneal.rng_seed = pc.seed;
        if (by_lambda) {
            pc.weights_mode = WeightsMode::Total;
            pc.lambda = points[i];
        } else {
            pc.weights_mode = WeightsMode::Target;
            pc.target_total = points[i];
        }
        rows.push_back(run(pc, (fs::path(out_dir) / ("point_" + std::to_string(i))).string()));
    }
    write_sweep_csv(rows, (fs::path(out_dir) / "sweep.csv").string());
    return rows;
}

std::string summary_json(const RunResult& r) {
    json j;
    j["method"] = r.method;
    j["seed"] = r.seed;
    j["lambda1"] = r.lambda1;
    j["lambda2"] = r.lambda2;
    j["D"] = r.D;
    j["P1"] = r.P1;
    j["P2"] = r.P2;
    j["J"] = r.J;
    j["SNR_dB"] = r.snr_db;
    j["CSNR_dB"] = r.csnr_db;
    j["converged"] = r.converged;
    j["weights_converged"] = r.weights_converged;
    j["weight_iterations"] = r.weight_iterations;
    j["monte_carlo"] = {{"D", r.mc.D},
                        {"stderr", r.mc.stderr_D},
                        {"P1", r.mc.P1},
                        {"P2", r.mc.P2},
                        {"samples", r.mc.samples},
                        {"within_3_stderr", r.mc_within_3se}};
    j["mapping"] = r.mapping_file;
    j["anneal_report"] = r.anneal_file;
    return j.dump(2) + "\n";
}

void write_summary(const RunResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary '" + path + "'");
    out << summary_json(r);
}

void write_anneal_csv(const AnnealReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write telemetry '" + path + "'");
    out << std::setprecision(17) << "T,D,P1,P2,H,J,F,clusters1,clusters2,inner_iters\n";
    for (const AnnealRecord& r : report.records) {
        out << r.T << "," << r.cost.D << "," << r.cost.P1 << "," << r.cost.P2 << "," << r.cost.H
            << "," << r.cost.J << "," << r.cost.F << "," << r.clusters1 << "," << r.clusters2
            << "," << r.inner_iters << "\n";
    }
}

void write_sweep_csv(const std::vector<RunResult>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sweep table '" + path + "'");
    out << std::setprecision(17) << "lambda1,lambda2,P1,P2,CSNR_dB,SNR_dB,method,converged\n";
    for (const RunResult& r : rows) {
        out << r.lambda1 << "," << r.lambda2 << "," << r.P1 << "," << r.P2 << "," << r.csnr_db
            << "," << r.snr_db << "," << r.method << "," << (r.weights_converged ? 1 : 0) << "\n";
    }
}

}  // namespace zdam
