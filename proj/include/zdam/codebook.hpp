#pragma once

// Encoder and decoder representations.

#include "zdam/numerics.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace zdam {

/// Local model g(x) = a * x + b.
struct AffineModel {
    double a = 0.0;
    double b = 0.0;

    double operator()(double x) const { return a * x + b; }
};

/// Piecewise-affine encoder with randomized cell membership.
///
/// `assoc(i, k)` is the probability that source node i uses model k. Rows
/// sum to one. Associations live only on the source grid nodes.
struct RandomizedEncoder {
    std::vector<AffineModel> models;
    Eigen::MatrixXd assoc;

    std::size_t num_models() const { return models.size(); }
    std::size_t num_nodes() const { return static_cast<std::size_t>(assoc.rows()); }

    /// Channel inputs g_k(x_i) as an N_x x K matrix.
    Eigen::MatrixXd inputs(const Eigen::VectorXd& x_grid) const;
};

/// Uniform associations over `models` on an n-node grid.
RandomizedEncoder make_encoder(std::vector<AffineModel> models, std::size_t n_nodes);

/// Returns a_k * x + b_k. Throws std::out_of_range for a bad model index.
double eval_model(const RandomizedEncoder& enc, std::size_t k, double x);

struct HardenedEncoder {
    Eigen::VectorXd values;
    std::vector<std::size_t> indices;
};

/// Argmax association per node, lowest index on ties.
HardenedEncoder harden(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid);

/// Replaces associations by their one-hot argmax.
RandomizedEncoder harden_in_place(RandomizedEncoder enc);

/// E{g^2(X)} under the randomized encoder. Throws std::invalid_argument on
/// misaligned lengths.
double encoder_power(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid,
                     const Eigen::VectorXd& marginal);

/// Smallest range covering every channel input that carries association mass.
InputRange input_range(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& assoc);

/// Conditional-mean estimates tabulated on the output lattice.
/// xhat(i, j) is the estimate for (y_grid_1[i], y_grid_2[j]).
struct DecoderTable {
    OutputGrid grid;
    Eigen::MatrixXd xhat1;
    Eigen::MatrixXd xhat2;
    /// Nodes that received no probability mass and were filled from a neighbour.
    std::size_t filled_nodes = 0;
};

/// Bilinear interpolation, clamped to the table edge outside the lattice.
std::pair<double, double> decode(const DecoderTable& table, double y1, double y2);

}  // namespace zdam
