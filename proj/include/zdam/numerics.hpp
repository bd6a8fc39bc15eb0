#pragma once

// Discretized sources, channel noises and channel-output lattices.
//
// Every expectation in the library is a finite sum over these grids. The
// source grid is a uniform lattice whose nodes carry the probability mass
// of the surrounding cell; alongside the mass each cell stores its
// conditional mean and variance so that a piecewise-constant encoder
// (constant on each cell) has an exact grid cost.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace zdam {

/// Rows with marginal mass below this are flagged and skipped.
inline constexpr double kUnderflowFloor = 1e-300;

struct SourceModel {
    double rho = 0.0;
    double var1 = 1.0;
    double var2 = 1.0;

    Eigen::VectorXd x_grid_1;
    Eigen::VectorXd x_grid_2;

    /// q_joint(i, j): probability of the cell around (x_grid_1[i], x_grid_2[j]).
    Eigen::MatrixXd q_joint;
    /// Conditional cell means E[X1 | cell], E[X2 | cell].
    Eigen::MatrixXd mean_1;
    Eigen::MatrixXd mean_2;
    /// E[(X1 - mean_1)^2 + (X2 - mean_2)^2 | cell].
    Eigen::MatrixXd cell_var;

    Eigen::VectorXd q_marg_1;  // row sums of q_joint
    Eigen::VectorXd q_marg_2;  // column sums of q_joint

    /// Row i holds q(x2_j | x1_i); rows of flagged x1 nodes are zero.
    Eigen::MatrixXd q_cond_2_given_1;
    /// Row j holds q(x1_i | x2_j); rows of flagged x2 nodes are zero.
    Eigen::MatrixXd q_cond_1_given_2;
    std::vector<bool> flagged_1;
    std::vector<bool> flagged_2;

    std::size_t size_1() const { return static_cast<std::size_t>(x_grid_1.size()); }
    std::size_t size_2() const { return static_cast<std::size_t>(x_grid_2.size()); }

    /// First-moment masses q(i,j) * E[X_side | cell].
    Eigen::MatrixXd first_moment(int side) const;
    /// E[X1^2 + X2^2 ; x1 cell] summed over x2 (side 1) or over x1 (side 2).
    Eigen::VectorXd strip_second_moment(int side) const;
    /// Standard deviation of the source on one side.
    double std_dev(int side) const;
};

/// Builds the lattice model of a zero-mean bivariate Gaussian source.
///
/// Nodes are uniform over +-span_sigmas standard deviations. Cell masses and
/// moments are integrated over the cell (Gauss-Legendre in x1, closed-form
/// truncated-normal moments in x2) and renormalized over the truncated
/// lattice. Throws ConfigError on out-of-range parameters.
SourceModel build_source_model(double rho, double var1, double var2, std::size_t n_x,
                               double span_sigmas);

/// Lattice model from explicit point masses (no within-cell spread).
SourceModel source_from_masses(Eigen::VectorXd x_grid_1, Eigen::VectorXd x_grid_2,
                               const Eigen::MatrixXd& masses);

struct NoiseModel {
    double var = 0.0;
    Eigen::VectorXd n_grid;
    Eigen::VectorXd n_mass;

    double std_dev() const;
    double min() const { return n_grid(0); }
    double max() const { return n_grid(n_grid.size() - 1); }
};

/// Symmetric lattice with Gaussian masses. Throws ConfigError if var <= 0 or n_n < 5.
NoiseModel build_noise_model(double var, std::size_t n_n, double span_sigmas);

struct OutputGrid {
    Eigen::VectorXd y_grid_1;
    Eigen::VectorXd y_grid_2;
    /// Set when a channel's encoder range was zero-width and got widened.
    bool widened = false;

    std::size_t size() const { return static_cast<std::size_t>(y_grid_1.size()); }
};

/// Closed range of channel-input values an encoder can emit.
struct InputRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Uniform lattice covering [lo + min n, hi + max n], extended by margin * width
/// at each end. A zero-width input range is widened to the noise standard
/// deviation and reported through `widened`.
Eigen::VectorXd build_output_axis(InputRange range, const NoiseModel& noise, std::size_t n_y,
                                  double margin, bool* widened = nullptr);

OutputGrid build_output_grid(InputRange range_1, const NoiseModel& noise_1, InputRange range_2,
                             const NoiseModel& noise_2, std::size_t n_y, double margin);

/// Uniform lattice helpers.
Eigen::VectorXd uniform_grid(double lo, double hi, std::size_t n);
double grid_spacing(const Eigen::VectorXd& grid);

double normal_pdf(double z);
/// P(a < Z < b) for standard normal Z, accurate in both tails.
double normal_interval(double a, double b);

}  // namespace zdam
