#include "zdam/numerics.hpp"

#include "zdam/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace zdam {

namespace {

constexpr std::size_t kCellQuadratureOrder = 16;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void finish_marginals(SourceModel& s) {
    s.q_marg_1 = s.q_joint.rowwise().sum();
    s.q_marg_2 = s.q_joint.colwise().sum().transpose();
    const auto n1 = s.q_joint.rows();
    const auto n2 = s.q_joint.cols();
    s.q_cond_2_given_1 = Eigen::MatrixXd::Zero(n1, n2);
    s.q_cond_1_given_2 = Eigen::MatrixXd::Zero(n2, n1);
    s.flagged_1.assign(static_cast<std::size_t>(n1), false);
    s.flagged_2.assign(static_cast<std::size_t>(n2), false);
    for (Eigen::Index i = 0; i < n1; ++i) {
        if (s.q_marg_1(i) < kUnderflowFloor) {
            s.flagged_1[static_cast<std::size_t>(i)] = true;
            continue;
        }
        s.q_cond_2_given_1.row(i) = s.q_joint.row(i) / s.q_marg_1(i);
    }
    for (Eigen::Index j = 0; j < n2; ++j) {
        if (s.q_marg_2(j) < kUnderflowFloor) {
            s.flagged_2[static_cast<std::size_t>(j)] = true;
            continue;
        }
        s.q_cond_1_given_2.row(j) = s.q_joint.col(j).transpose() / s.q_marg_2(j);
    }
}

}  // namespace

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double normal_interval(double a, double b) {
    const double r = std::numbers::sqrt2 / 2.0;
    if (a >= 0.0) return 0.5 * (std::erfc(a * r) - std::erfc(b * r));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * r) - std::erfc(-a * r));
    return 1.0 - 0.5 * std::erfc(b * r) - 0.5 * std::erfc(-a * r);
}

Eigen::VectorXd uniform_grid(double lo, double hi, std::size_t n) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g(static_cast<Eigen::Index>(i)) = lo + step * static_cast<double>(i);
    g(g.size() - 1) = hi;
    return g;
}

double grid_spacing(const Eigen::VectorXd& grid) {
    return (grid(grid.size() - 1) - grid(0)) / static_cast<double>(grid.size() - 1);
}

Eigen::MatrixXd SourceModel::first_moment(int side) const {
    return q_joint.cwiseProduct(side == 1 ? mean_1 : mean_2);
}

Eigen::VectorXd SourceModel::strip_second_moment(int side) const {
    const Eigen::MatrixXd per_cell =
        q_joint.cwiseProduct(mean_1.cwiseAbs2() + mean_2.cwiseAbs2() + cell_var);
    if (side == 1) return per_cell.rowwise().sum();
    return per_cell.colwise().sum().transpose();
}

double SourceModel::std_dev(int side) const { return std::sqrt(side == 1 ? var1 : var2); }

SourceModel build_source_model(double rho, double var1, double var2, std::size_t n_x,
                               double span_sigmas) {
    require(std::isfinite(rho) && std::abs(rho) < 1.0, "source: |rho| must be < 1");
    require(std::isfinite(var1) && var1 > 0.0, "source: var1 must be > 0");
    require(std::isfinite(var2) && var2 > 0.0, "source: var2 must be > 0");
    require(n_x >= 8, "source: n_x must be >= 8");
    require(std::isfinite(span_sigmas) && span_sigmas > 0.0, "source: span must be > 0");

    using Rule = boost::math::quadrature::gauss<double, kCellQuadratureOrder>;
    const auto& abscissa = Rule::abscissa();
    const auto& weights = Rule::weights();

    const auto n = static_cast<Eigen::Index>(n_x);
    const double sd1 = std::sqrt(var1);
    const double sd2 = std::sqrt(var2);
    // Work in standardized coordinates; both axes share the same z lattice.
    const Eigen::VectorXd z = uniform_grid(-span_sigmas, span_sigmas, n_x);
    const double half = 0.5 * grid_spacing(z);
    const double s = std::sqrt(1.0 - rho * rho);

    SourceModel src;
    src.rho = rho;
    src.var1 = var1;
    src.var2 = var2;
    src.x_grid_1 = sd1 * z;
    src.x_grid_2 = sd2 * z;

    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd m11 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd m22 = Eigen::MatrixXd::Zero(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t q = 0; q < 2 * abscissa.size(); ++q) {
            const std::size_t a = q / 2;
            const double xi = (q % 2 == 0) ? abscissa[a] : -abscissa[a];
            const double t = z(i) + half * xi;
            const double f = weights[a] * half * normal_pdf(t);
            const double m = rho * t;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double alpha = (z(j) - half - m) / s;
                const double beta = (z(j) + half - m) / s;
                const double p = normal_interval(alpha, beta);
                const double pa = normal_pdf(alpha);
                const double pb = normal_pdf(beta);
                const double dphi = pa - pb;
                const double e1 = m * p + s * dphi;
                const double e2 = (m * m + s * s) * p + 2.0 * m * s * dphi +
                                  s * s * (alpha * pa - beta * pb);
                mass(i, j) += f * p;
                m1(i, j) += f * t * p;
                m11(i, j) += f * t * t * p;
                m2(i, j) += f * e1;
                m22(i, j) += f * e2;
            }
        }
    }

    const double total = mass.sum();
    src.q_joint = mass / total;
    src.mean_1.resize(n, n);
    src.mean_2.resize(n, n);
    src.cell_var.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = mass(i, j);
            if (w < kUnderflowFloor) {
                src.mean_1(i, j) = src.x_grid_1(i);
                src.mean_2(i, j) = src.x_grid_2(j);
                src.cell_var(i, j) = 0.0;
                continue;
            }
            const double mu1 = m1(i, j) / w;
            const double mu2 = m2(i, j) / w;
            const double v1 = std::max(0.0, m11(i, j) / w - mu1 * mu1);
            const double v2 = std::max(0.0, m22(i, j) / w - mu2 * mu2);
            src.mean_1(i, j) = sd1 * mu1;
            src.mean_2(i, j) = sd2 * mu2;
            src.cell_var(i, j) = var1 * v1 + var2 * v2;
        }
    }
    finish_marginals(src);
    return src;
}

SourceModel source_from_masses(Eigen::VectorXd x_grid_1, Eigen::VectorXd x_grid_2,
                               const Eigen::MatrixXd& masses) {
    require(masses.rows() == x_grid_1.size() && masses.cols() == x_grid_2.size(),
            "source: mass table does not match grids");
    require((masses.array() >= 0.0).all() && masses.sum() > 0.0,
            "source: masses must be nonnegative with positive total");
    SourceModel src;
    const Eigen::MatrixXd q = masses / masses.sum();
    src.q_joint = q;
    src.mean_1 = x_grid_1.replicate(1, x_grid_2.size());
    src.mean_2 = x_grid_2.transpose().replicate(x_grid_1.size(), 1);
    src.cell_var = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    src.x_grid_1 = std::move(x_grid_1);
    src.x_grid_2 = std::move(x_grid_2);
    finish_marginals(src);
    const double e1 = src.q_marg_1.dot(src.x_grid_1);
    const double e2 = src.q_marg_2.dot(src.x_grid_2);
    src.var1 = src.q_marg_1.dot(src.x_grid_1.cwiseAbs2()) - e1 * e1;
    src.var2 = src.q_marg_2.dot(src.x_grid_2.cwiseAbs2()) - e2 * e2;
    const double cov = src.x_grid_1.dot(q * src.x_grid_2) - e1 * e2;
    src.rho = (src.var1 > 0.0 && src.var2 > 0.0) ? cov / std::sqrt(src.var1 * src.var2) : 0.0;
    return src;
}

double NoiseModel::std_dev() const { return std::sqrt(var); }

NoiseModel build_noise_model(double var, std::size_t n_n, double span_sigmas) {
    require(std::isfinite(var) && var > 0.0, "noise: var must be > 0");
    require(n_n >= 5, "noise: n_n must be >= 5");
    require(std::isfinite(span_sigmas) && span_sigmas > 0.0, "noise: span must be > 0");

    NoiseModel nm;
    nm.var = var;
    const auto n = static_cast<Eigen::Index>(n_n);
    const double sd = std::sqrt(var);
    const double lim = span_sigmas * sd;
    const double step = 2.0 * lim / static_cast<double>(n - 1);
    nm.n_grid.resize(n);
    for (Eigen::Index i = 0; i < n / 2; ++i) {
        const double v = -lim + step * static_cast<double>(i);
        nm.n_grid(i) = v;
        nm.n_grid(n - 1 - i) = -v;
    }
    if (n % 2 == 1) nm.n_grid(n / 2) = 0.0;
    nm.n_mass.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) nm.n_mass(i) = normal_pdf(nm.n_grid(i) / sd);
    nm.n_mass /= nm.n_mass.sum();
    return nm;
}

Eigen::VectorXd build_output_axis(InputRange range, const NoiseModel& noise, std::size_t n_y,
                                  double margin, bool* widened) {
    require(n_y >= 16, "grid: n_y must be >= 16");
    require(std::isfinite(range.lo) && std::isfinite(range.hi) && range.lo <= range.hi,
            "grid: encoder range is not finite");
    require(margin >= 0.0, "grid: margin must be >= 0");
    if (widened) *widened = false;
    const double width = range.hi - range.lo;
    const double min_width = noise.std_dev();
    if (width <= 1e-12 * (1.0 + std::abs(range.lo))) {
        const double c = 0.5 * (range.lo + range.hi);
        range = {c - 0.5 * min_width, c + 0.5 * min_width};
        if (widened) *widened = true;
    }
    double lo = range.lo + noise.min();
    double hi = range.hi + noise.max();
    const double extra = margin * (hi - lo);
    lo -= extra;
    hi += extra;
    return uniform_grid(lo, hi, n_y);
}

OutputGrid build_output_grid(InputRange range_1, const NoiseModel& noise_1, InputRange range_2,
                             const NoiseModel& noise_2, std::size_t n_y, double margin) {
    OutputGrid g;
    bool w1 = false;
    bool w2 = false;
    g.y_grid_1 = build_output_axis(range_1, noise_1, n_y, margin, &w1);
    g.y_grid_2 = build_output_axis(range_2, noise_2, n_y, margin, &w2);
    g.widened = w1 || w2;
    return g;
}

}  // namespace zdam
