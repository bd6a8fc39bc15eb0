#include "zdam/annealer.hpp"

#include "zdam/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace zdam {

void AnnealConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("anneal: ") + what);
    };
    require(std::isfinite(T_init) && std::isfinite(T_min), "temperatures must be finite");
    require(T_init <= 0.0 || T_min <= 0.0 || T_min < T_init, "T_min must be below T_init");
    require(t_init_scale > 0.0, "t_init_scale must be > 0");
    require(t_min_ratio > 0.0 && t_min_ratio < 1.0, "t_min_ratio must be in (0, 1)");
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
    require(perturb_eps > 0.0, "perturb_eps must be > 0");
    require(inner_tol > 0.0, "inner_tol must be > 0");
    require(zero_tol > 0.0, "zero_tol must be > 0");
    require(inner_max_iters >= 1, "inner_max_iters must be >= 1");
    require(gd_step_init > 0.0, "gd_step_init must be > 0");
    require(gd_backtrack_factor > 0.0 && gd_backtrack_factor < 1.0,
            "gd_backtrack_factor must be in (0, 1)");
    require(K1 >= 1 && K2 >= 1, "K1 and K2 must be >= 1");
    require(n_y >= 16, "n_y must be >= 16");
    require(margin >= 0.0, "margin must be >= 0");
    require(merge_tol > 0.0, "merge_tol must be > 0");
}

EncoderPair init_state(const AnnealConfig& config, const SourceModel& source) {
    const auto slope = [](double target, double var) {
        return std::sqrt((target > 0.0 ? target : var) / var);
    };
    const AffineModel m1{slope(config.p_target1, source.var1), 0.0};
    const AffineModel m2{slope(config.p_target2, source.var2), 0.0};
    return {make_encoder(std::vector<AffineModel>(config.K1, m1), source.size_1()),
            make_encoder(std::vector<AffineModel>(config.K2, m2), source.size_2())};
}

RandomizedEncoder perturb(RandomizedEncoder enc, double eps, double source_std,
                          std::mt19937_64& rng) {
    if (eps <= 0.0 || enc.models.empty()) return enc;
    double s_a = 0.0;
    for (const AffineModel& m : enc.models) s_a += std::abs(m.a);
    s_a = std::max(s_a / static_cast<double>(enc.models.size()), 1e-3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (AffineModel& m : enc.models) {
        m.a += eps * s_a * u(rng);
        m.b += eps * source_std * u(rng);
    }
    return enc;
}

std::size_t cluster_count(const RandomizedEncoder& enc, double merge_tol, double b_scale) {
    const std::size_t k = enc.models.size();
    std::vector<std::size_t> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    std::size_t classes = k;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double d = std::max(std::abs(enc.models[i].a - enc.models[j].a),
                                      std::abs(enc.models[i].b - enc.models[j].b) / b_scale);
            if (d > merge_tol) continue;
            const std::size_t a = find(i);
            const std::size_t b = find(j);
            if (a != b) {
                parent[a] = b;
                --classes;
            }
        }
    }
    return classes;
}

Eigen::VectorXd finite_difference_gradient(const RandomizedEncoder& enc,
                                           const Eigen::VectorXd& x_grid, const ColumnCost& cost) {
    const auto k_count = static_cast<Eigen::Index>(enc.models.size());
    Eigen::VectorXd g(2 * k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const AffineModel m = enc.models[static_cast<std::size_t>(k)];
        const double ha = std::max(1e-4 * std::abs(m.a), 1e-6);
        const double hb = std::max(1e-4 * std::abs(m.b), 1e-6);
        const auto column = [&](double a, double b) -> Eigen::VectorXd {
            return (a * x_grid.array() + b).matrix();
        };
        g(k) = (cost(k, column(m.a + ha, m.b)) - cost(k, column(m.a - ha, m.b))) / (2.0 * ha);
        g(k_count + k) =
            (cost(k, column(m.a, m.b + hb)) - cost(k, column(m.a, m.b - hb))) / (2.0 * hb);
    }
    return g;
}

Eigen::VectorXd power_gradient(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid,
                               const Eigen::VectorXd& marginal) {
    const auto k_count = static_cast<Eigen::Index>(enc.models.size());
    Eigen::VectorXd g(2 * k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const AffineModel m = enc.models[static_cast<std::size_t>(k)];
        const Eigen::ArrayXd w = marginal.array() * enc.assoc.col(k).array() *
                                 (m.a * x_grid.array() + m.b) * 2.0;
        g(k) = (w * x_grid.array()).sum();
        g(k_count + k) = w.sum();
    }
    return g;
}

Eigen::VectorXd model_gradient(const SideCost& cost, const RandomizedEncoder& enc,
                               const Eigen::VectorXd& x_grid) {
    const EncoderView view = view_of(enc, x_grid);
    return finite_difference_gradient(enc, x_grid, [&](Eigen::Index k, const Eigen::VectorXd& c) {
        return cost.column_value(view, k, c);
    });
}

DescentResult descend_models(const SideCost& cost, RandomizedEncoder& enc,
                             const Eigen::VectorXd& x_grid, const DescentOptions& options) {
    DescentResult res;
    res.f_before = cost.value(view_of(enc, x_grid));
    res.f_after = res.f_before;
    const auto k_count = static_cast<Eigen::Index>(enc.models.size());

    // Diagonal scaling by the curvature of the power-like part of the cost.
    const Eigen::VectorXd& q = cost.marginal();
    Eigen::VectorXd scale(2 * k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const Eigen::ArrayXd w = q.array() * enc.assoc.col(k).array();
        scale(k) = 2.0 * (w * x_grid.array().square()).sum();
        scale(k_count + k) = 2.0 * w.sum();
    }

    double step = options.step_init;
    const double floor = 1e-12 * options.step_init;
    for (std::size_t it = 0; it < options.max_iters; ++it) {
        const Eigen::VectorXd g = model_gradient(cost, enc, x_grid);
        if (!g.allFinite()) break;
        Eigen::VectorXd dir(2 * k_count);
        for (Eigen::Index p = 0; p < dir.size(); ++p) {
            dir(p) = scale(p) > 1e-12 ? -g(p) / scale(p) : 0.0;
        }
        const double slope = g.dot(dir);
        if (!(slope < 0.0)) break;

        bool accepted = false;
        while (step >= floor) {
            RandomizedEncoder trial = enc;
            for (Eigen::Index k = 0; k < k_count; ++k) {
                trial.models[static_cast<std::size_t>(k)].a += step * dir(k);
                trial.models[static_cast<std::size_t>(k)].b += step * dir(k_count + k);
            }
            const double f = cost.value(view_of(trial, x_grid));
            if (std::isfinite(f) && f <= res.f_after + 1e-4 * step * slope && f < res.f_after) {
                enc = std::move(trial);
                res.f_after = f;
                ++res.accepted_steps;
                accepted = true;
                break;
            }
            step *= options.backtrack;
        }
        if (!accepted) break;
        step = std::min(2.0 * step, 1e3 * options.step_init);
    }
    return res;
}

namespace {

double active_mass(const RandomizedEncoder& enc, Eigen::Index k, const Eigen::VectorXd& q) {
    return q.dot(enc.assoc.col(k));
}

std::size_t active_clusters(const RandomizedEncoder& enc, const Eigen::VectorXd& q,
                            double min_mass, double merge_tol, double b_scale) {
    RandomizedEncoder active;
    for (Eigen::Index k = 0; k < enc.assoc.cols(); ++k) {
        if (active_mass(enc, k, q) >= min_mass) {
            active.models.push_back(enc.models[static_cast<std::size_t>(k)]);
        }
    }
    if (active.models.empty()) return 1;
    return cluster_count(active, merge_tol, b_scale);
}

/// F from a side cost that already carries D + lambda_self * P_self.
CostReport report_from(const SideCost& cost, const EncoderView& self, const EncoderView& other,
                       const Problem& problem, double temperature) {
    const Side side = cost.side();
    const SourceModel& s = problem.source;
    const Eigen::VectorXd& q_self = side == Side::First ? s.q_marg_1 : s.q_marg_2;
    const Eigen::VectorXd& q_other = side == Side::First ? s.q_marg_2 : s.q_marg_1;
    const double p_self = power_of(self, q_self);
    const double p_other = power_of(other, q_other);
    const double d = cost.value(self) - cost.lambda() * p_self;
    const double h =
        association_entropy(self.assoc, q_self) + association_entropy(other.assoc, q_other);
    const double p1 = side == Side::First ? p_self : p_other;
    const double p2 = side == Side::First ? p_other : p_self;
    CostReport r = cost_report(d, p1, p2, h, problem.weights, temperature);
    if (!std::isfinite(r.F)) {
        throw NumericError("anneal: non-finite free energy at T=" + std::to_string(temperature));
    }
    return r;
}

SideCost side_cost(const Problem& p, const DecoderTable& decoder, const EncoderView& other,
                   Side side) {
    return side == Side::First
               ? SideCost(p.source, p.noise1, p.noise2, decoder, other, side, p.weights.lambda1)
               : SideCost(p.source, p.noise2, p.noise1, decoder, other, side, p.weights.lambda2);
}

}  // namespace

void optimize_models(EncoderPair& pair, const Problem& problem, const DecoderTable& decoder,
                     const DescentOptions& options) {
    const SourceModel& s = problem.source;
    const SideCost c1 = side_cost(problem, decoder, view_of(pair.enc2, s.x_grid_2), Side::First);
    descend_models(c1, pair.enc1, s.x_grid_1, options);
    const SideCost c2 = side_cost(problem, decoder, view_of(pair.enc1, s.x_grid_1), Side::Second);
    descend_models(c2, pair.enc2, s.x_grid_2, options);
}

GridEncoder to_grid_encoder(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid) {
    return GridEncoder{harden(enc, x_grid).values};
}

GreedyResult zero_temperature_phase(const GridEncoder& enc1, const GridEncoder& enc2,
                                    const Problem& problem, const AnnealConfig& config,
                                    const OutputGrid* grid) {
    GreedyOptions g;
    g.tol = config.zero_tol;
    g.max_sweeps = config.zero_max_sweeps;
    g.n_y = config.n_y;
    g.margin = config.margin;
    return greedy_descend(enc1, enc2, problem, g, grid);
}

AnnealResult anneal(const AnnealConfig& config, const Problem& problem,
                    const RecordCallback& on_record) {
    config.validate();
    const SourceModel& s = problem.source;
    const Eigen::VectorXd& x1 = s.x_grid_1;
    const Eigen::VectorXd& x2 = s.x_grid_2;
    const double std1 = s.std_dev(1);
    const double std2 = s.std_dev(2);

    EncoderPair st = init_state(config, s);
    OutputGrid grid =
        covering_grid(problem, view_of(st.enc1, x1), view_of(st.enc2, x2), config.n_y,
                      config.margin);
    DecoderTable decoder = compute_decoder(problem, view_of(st.enc1, x1), view_of(st.enc2, x2), grid);

    AnnealResult out;
    AnnealReport& rep = out.report;
    rep.D0 = evaluate(problem, view_of(st.enc1, x1), view_of(st.enc2, x2), decoder, 0.0).D;
    rep.T_init = config.T_init > 0.0 ? config.T_init : config.t_init_scale * rep.D0;
    rep.T_min = config.T_min > 0.0 ? config.T_min : config.t_min_ratio * rep.T_init;
    if (!(rep.T_min < rep.T_init)) throw ConfigError("anneal: T_min must be below T_init");

    const DescentOptions gd{config.gd_step_init, config.gd_backtrack_factor, config.gd_max_iters};
    std::mt19937_64 rng(config.rng_seed);
    std::size_t prev_c1 = 1;
    std::size_t prev_c2 = 1;

    for (double T = rep.T_init; T >= rep.T_min * (1.0 - 1e-12); T *= config.alpha) {
        AnnealRecord rec;
        rec.T = T;
        st.enc1 = perturb(std::move(st.enc1), config.perturb_eps, std1, rng);
        st.enc2 = perturb(std::move(st.enc2), config.perturb_eps, std2, rng);
        if (grid_needs_rebuild(grid, problem, view_of(st.enc1, x1), view_of(st.enc2, x2),
                               config.margin)) {
            grid = covering_grid(problem, view_of(st.enc1, x1), view_of(st.enc2, x2), config.n_y,
                                 config.margin);
            rec.grid_rebuilt = true;
        }

        CostReport last;
        for (std::size_t it = 0; it < config.inner_max_iters; ++it) {
            EncoderView v1 = view_of(st.enc1, x1);
            EncoderView v2 = view_of(st.enc2, x2);
            decoder = compute_decoder(problem, v1, v2, grid);

            const SideCost c1 = side_cost(problem, decoder, v2, Side::First);
            last = report_from(c1, v1, v2, problem, T);
            const double f_iter = last.F;
            rec.f_trace.push_back(last.F);

            st.enc1.assoc = gibbs_update(c1.model_cost(v1.inputs), T);
            v1.assoc = st.enc1.assoc;
            rec.f_trace.push_back(report_from(c1, v1, v2, problem, T).F);

            const SideCost c2 = side_cost(problem, decoder, v1, Side::Second);
            st.enc2.assoc = gibbs_update(c2.model_cost(v2.inputs), T);
            v2.assoc = st.enc2.assoc;
            rec.f_trace.push_back(report_from(c2, v2, v1, problem, T).F);

            const SideCost d1 = side_cost(problem, decoder, v2, Side::First);
            descend_models(d1, st.enc1, x1, gd);
            v1 = view_of(st.enc1, x1);
            rec.f_trace.push_back(report_from(d1, v1, v2, problem, T).F);

            const SideCost d2 = side_cost(problem, decoder, v1, Side::Second);
            descend_models(d2, st.enc2, x2, gd);
            v2 = view_of(st.enc2, x2);
            last = report_from(d2, v2, v1, problem, T);
            rec.f_trace.push_back(last.F);

            rec.inner_iters = it + 1;
            if (std::abs(f_iter - last.F) <= config.inner_tol * std::abs(last.F)) break;
        }

        rec.cost = last;
        rec.clusters1 = active_clusters(st.enc1, s.q_marg_1, config.active_mass, config.merge_tol,
                                        std1);
        rec.clusters2 = active_clusters(st.enc2, s.q_marg_2, config.active_mass, config.merge_tol,
                                        std2);
        if (rec.clusters1 > prev_c1 || rec.clusters2 > prev_c2) {
            rep.critical_temperatures.push_back(T);
        }
        prev_c1 = rec.clusters1;
        prev_c2 = rec.clusters2;
        if (on_record) on_record(rec);
        rep.records.push_back(std::move(rec));
    }

    out.model1 = harden_in_place(st.enc1);
    out.model2 = harden_in_place(st.enc2);
    out.enc1 = to_grid_encoder(out.model1, x1);
    out.enc2 = to_grid_encoder(out.model2, x2);
    decoder = compute_decoder(problem, view_of(out.enc1), view_of(out.enc2), grid);
    rep.hardened = evaluate(problem, view_of(out.enc1), view_of(out.enc2), decoder, 0.0);

    if (config.zero_temperature) {
        GreedyResult g = zero_temperature_phase(out.enc1, out.enc2, problem, config, &grid);
        out.enc1 = std::move(g.enc1);
        out.enc2 = std::move(g.enc2);
        decoder = std::move(g.decoder);
        rep.zero_sweeps = g.sweeps.size();
    }
    out.decoder = std::move(decoder);
    rep.final_cost = evaluate(problem, view_of(out.enc1), view_of(out.enc2), out.decoder, 0.0);
    return out;
}

}  // namespace zdam
