#include "zdam/baselines.hpp"

#include "zdam/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace zdam {

EncoderView view_of(const GridEncoder& enc) {
    EncoderView v;
    v.inputs = enc.values;
    v.assoc = Eigen::MatrixXd::Ones(enc.values.size(), 1);
    return v;
}

NodeChoice minimize_node(const SideCost& cost, Eigen::Index i, double current, double span,
                         double lo, double hi, const GreedyOptions& options) {
    NodeChoice best{current, cost.node_cost(i, current)};
    const std::size_t n = std::max<std::size_t>(options.candidates, 2);
    const double step = 2.0 * span / static_cast<double>(n - 1);
    double best_candidate = current;
    double best_candidate_cost = best.cost;
    for (std::size_t c = 0; c < n; ++c) {
        const double u = current - span + step * static_cast<double>(c);
        if (u < lo || u > hi) continue;
        const double v = cost.node_cost(i, u);
        if (v < best_candidate_cost) {
            best_candidate_cost = v;
            best_candidate = u;
        }
    }

    // Golden-section refinement within one candidate spacing of the winner.
    double a = std::max(lo, best_candidate - step);
    double b = std::min(hi, best_candidate + step);
    if (b > a) {
        constexpr double kInvPhi = 0.6180339887498949;
        double c = b - kInvPhi * (b - a);
        double d = a + kInvPhi * (b - a);
        double fc = cost.node_cost(i, c);
        double fd = cost.node_cost(i, d);
        for (std::size_t it = 0; it < options.golden_iters; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - kInvPhi * (b - a);
                fc = cost.node_cost(i, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + kInvPhi * (b - a);
                fd = cost.node_cost(i, d);
            }
        }
        if (fc < best_candidate_cost) {
            best_candidate_cost = fc;
            best_candidate = c;
        }
        if (fd < best_candidate_cost) {
            best_candidate_cost = fd;
            best_candidate = d;
        }
    }
    if (best_candidate_cost < best.cost) best = {best_candidate, best_candidate_cost};
    return best;
}

namespace {

const NoiseModel& noise_of(const Problem& p, Side s) {
    return s == Side::First ? p.noise1 : p.noise2;
}

const Eigen::VectorXd& marginal_of(const SourceModel& s, Side side) {
    return side == Side::First ? s.q_marg_1 : s.q_marg_2;
}

void update_side(GridEncoder& self, const GridEncoder& other, Side side, const Problem& problem,
                 const DecoderTable& decoder, const GreedyOptions& options) {
    const NoiseModel& noise = noise_of(problem, side);
    const SideCost cost(problem.source, noise, noise_of(problem, zdam::other(side)), decoder,
                        view_of(other), side, problem.weights[side]);
    const Eigen::VectorXd& q = marginal_of(problem.source, side);
    const double mean = q.dot(self.values);
    const double var_g = std::max(0.0, q.dot(self.values.cwiseAbs2()) - mean * mean);
    const double span = options.candidate_span * std::sqrt(var_g + noise.var);

    const Eigen::VectorXd& y = side == Side::First ? decoder.grid.y_grid_1 : decoder.grid.y_grid_2;
    const double lo = y(0) + 4.0 * noise.std_dev();
    const double hi = y(y.size() - 1) - 4.0 * noise.std_dev();

    const std::vector<bool>& flagged = cost.flagged();
    const Eigen::Index n = self.values.size();
    auto visit = [&](Eigen::Index i) {
        if (flagged[static_cast<std::size_t>(i)]) return;
        const NodeChoice c = minimize_node(cost, i, self.values(i), span, lo, hi, options);
        self.values(i) = c.value;
    };
    for (Eigen::Index i = 0; i < n; ++i) visit(i);
    for (Eigen::Index i = n - 1; i >= 0; --i) visit(i);
}

void check_finite(double j, const char* where) {
    if (!std::isfinite(j)) throw NumericError(std::string(where) + ": non-finite J");
}

}  // namespace

GreedyResult greedy_descend(const GridEncoder& init1, const GridEncoder& init2,
                            const Problem& problem, const GreedyOptions& options,
                            const OutputGrid* start_grid) {
    if (init1.values.size() != static_cast<Eigen::Index>(problem.source.size_1()) ||
        init2.values.size() != static_cast<Eigen::Index>(problem.source.size_2())) {
        throw ConfigError("greedy: encoder length does not match the source grid");
    }
    if (!init1.values.allFinite() || !init2.values.allFinite()) {
        throw NumericError("greedy: non-finite initial encoder");
    }

    GreedyResult res;
    res.enc1 = init1;
    res.enc2 = init2;
    OutputGrid grid = start_grid ? *start_grid
                                 : covering_grid(problem, view_of(res.enc1), view_of(res.enc2),
                                                 options.n_y, options.margin);
    res.decoder = compute_decoder(problem, view_of(res.enc1), view_of(res.enc2), grid);
    res.cost = evaluate(problem, view_of(res.enc1), view_of(res.enc2), res.decoder, 0.0);

    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        SweepRecord rec;
        if (grid_needs_rebuild(res.decoder.grid, problem, view_of(res.enc1), view_of(res.enc2),
                               options.margin)) {
            grid = covering_grid(problem, view_of(res.enc1), view_of(res.enc2), options.n_y,
                                 options.margin);
            res.decoder = compute_decoder(problem, view_of(res.enc1), view_of(res.enc2), grid);
            res.cost = evaluate(problem, view_of(res.enc1), view_of(res.enc2), res.decoder, 0.0);
            rec.grid_rebuilt = true;
        }
        rec.j_before = res.cost.J;

        update_side(res.enc1, res.enc2, Side::First, problem, res.decoder, options);
        update_side(res.enc2, res.enc1, Side::Second, problem, res.decoder, options);
        rec.j_after = evaluate(problem, view_of(res.enc1), view_of(res.enc2), res.decoder, 0.0).J;
        check_finite(rec.j_after, "greedy");

        res.decoder = compute_decoder(problem, view_of(res.enc1), view_of(res.enc2),
                                      res.decoder.grid);
        res.cost = evaluate(problem, view_of(res.enc1), view_of(res.enc2), res.decoder, 0.0);
        rec.j_next = res.cost.J;
        check_finite(rec.j_next, "greedy");
        res.sweeps.push_back(rec);

        if (rec.j_before - rec.j_next <= options.tol * std::abs(rec.j_before)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

std::vector<double> ncr_schedule(const NcrConfig& config, double true_var) {
    if (config.stages == 0) throw ConfigError("ncr: stages must be >= 1");
    if (!(config.ncr_alpha > 0.0 && config.ncr_alpha < 1.0)) {
        throw ConfigError("ncr: alpha must be in (0, 1)");
    }
    if (!(config.sigma2_start >= true_var)) {
        throw ConfigError("ncr: sigma2_start must be >= the channel noise variance");
    }
    std::vector<double> out;
    double v = config.sigma2_start;
    for (std::size_t s = 0; s + 1 < config.stages; ++s) {
        out.push_back(std::max(v, true_var));
        v *= config.ncr_alpha;
    }
    out.push_back(true_var);
    return out;
}

GreedyResult ncr(const NcrConfig& config, const Problem& problem, const GridEncoder& init1,
                 const GridEncoder& init2, const GreedyOptions& options) {
    const std::vector<double> v1 = ncr_schedule(config, problem.noise1.var);
    const std::vector<double> v2 = ncr_schedule(config, problem.noise2.var);
    const auto rebuild = [](const NoiseModel& n, double var) {
        const double span = n.max() / n.std_dev();
        return build_noise_model(var, static_cast<std::size_t>(n.n_grid.size()), span);
    };

    GreedyResult res;
    res.enc1 = init1;
    res.enc2 = init2;
    for (std::size_t s = 0; s < v1.size(); ++s) {
        const bool last = s + 1 == v1.size();
        Problem stage = problem;
        if (!last) {
            stage.noise1 = rebuild(problem.noise1, v1[s]);
            stage.noise2 = rebuild(problem.noise2, v2[s]);
        }
        std::vector<SweepRecord> history = std::move(res.sweeps);
        res = greedy_descend(res.enc1, res.enc2, stage, options);
        history.insert(history.end(), res.sweeps.begin(), res.sweeps.end());
        res.sweeps = std::move(history);
    }
    return res;
}

GridEncoder linear_grid_encoder(const Eigen::VectorXd& x_grid, double slope, double offset) {
    return GridEncoder{(slope * x_grid.array() + offset).matrix()};
}

GridEncoder random_grid_encoder(const Eigen::VectorXd& x_grid, double source_var, double power,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    std::uniform_real_distribution<double> off(-0.5, 0.5);
    std::bernoulli_distribution flip(0.5);
    const double a0 = std::sqrt(power / source_var);
    const double slope = (flip(rng) ? -1.0 : 1.0) * a0 * mag(rng);
    const double offset = off(rng) * std::sqrt(power);
    return linear_grid_encoder(x_grid, slope, offset);
}

}  // namespace zdam
