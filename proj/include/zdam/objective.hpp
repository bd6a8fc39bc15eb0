#pragma once

// Cost evaluation on the grids: MMSE decoder, pairwise distortion tensor,
// power, entropy, Lagrangian, free energy and Gibbs association updates.
//
// Channel noise is integrated on the output lattice: a channel input u
// reaches node y with weight proportional to the noise density at y - u,
// normalized over the lattice. With that convention the decoder table is
// the exact minimizer of the grid distortion, so decoder, association and
// model updates each lower the same discrete free energy.

#include "zdam/codebook.hpp"
#include "zdam/numerics.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace zdam {

enum class Side { First = 1, Second = 2 };

inline int side_index(Side s) { return s == Side::First ? 1 : 2; }
inline Side other(Side s) { return s == Side::First ? Side::Second : Side::First; }

struct LagrangeWeights {
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    static LagrangeWeights total(double lambda) { return {lambda, lambda}; }
    double operator[](Side s) const { return s == Side::First ? lambda1 : lambda2; }
};

/// Any encoder reduced to what the cost needs: channel inputs g_k(x_i) and
/// association probabilities p(k | x_i), both N_x x K.
struct EncoderView {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd assoc;
};

EncoderView view_of(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid);

/// Noise likelihood of one channel restricted to its output lattice.
class ChannelLattice {
public:
    ChannelLattice(const Eigen::VectorXd& y_grid, double noise_var);

    /// Normalized node weights for channel input u, written to out[0..count)
    /// for nodes first..first+count-1. `out` must hold size() doubles.
    void weights(double u, Eigen::Index& first, Eigen::Index& count, double* out) const;

    /// Dense (K * N_x) x N_y likelihood; row k * N_x + i belongs to inputs(i, k).
    Eigen::MatrixXd dense(const Eigen::MatrixXd& inputs) const;

    /// Association-mixed likelihood, N_x x N_y: sum_k p(k|x) w(y | g_k(x)).
    Eigen::MatrixXd mixed(const EncoderView& enc) const;

    Eigen::Index size() const { return y_.size(); }

private:
    Eigen::VectorXd y_;
    double y0_;
    double step_;
    double inv_two_var_;
    double reach_;
};

/// Decoder tables of conditional means given the encoders.
DecoderTable compute_decoder(const SourceModel& source, const NoiseModel& noise1,
                             const NoiseModel& noise2, const EncoderView& enc1,
                             const EncoderView& enc2, const OutputGrid& grid);

/// D_{k1,k2}(x1, x2) for every model pair and cell.
struct DistortionTensor {
    std::size_t k1 = 0;
    std::size_t k2 = 0;
    /// values[k1 * k2_count + k2](i, j).
    std::vector<Eigen::MatrixXd> values;

    const Eigen::MatrixXd& slice(std::size_t a, std::size_t b) const { return values[a * k2 + b]; }
};

DistortionTensor compute_distortion_tensor(const SourceModel& source, const NoiseModel& noise1,
                                           const NoiseModel& noise2, const EncoderView& enc1,
                                           const EncoderView& enc2, const DecoderTable& decoder);

double expected_distortion(const DistortionTensor& tensor, const SourceModel& source,
                           const Eigen::MatrixXd& assoc1, const Eigen::MatrixXd& assoc2);

/// Per-node model cost d(k, x) = E{D_{k,K'}(x, X') | x} + lambda * g_k(x)^2, N_x x K.
/// Rows of flagged (zero-mass) nodes are zero.
Eigen::MatrixXd conditional_model_cost(const DistortionTensor& tensor, const SourceModel& source,
                                       const Eigen::MatrixXd& other_assoc, double lambda,
                                       const Eigen::MatrixXd& self_inputs, Side side);

/// Row-wise softmax of -cost / T, stabilized by subtracting each row's minimum.
Eigen::MatrixXd gibbs_update(const Eigen::MatrixXd& cost, double temperature);

/// H(K1|X1) + H(K2|X2) in nats.
double compute_entropy(const Eigen::MatrixXd& assoc1, const Eigen::MatrixXd& assoc2,
                       const SourceModel& source);

double association_entropy(const Eigen::MatrixXd& assoc, const Eigen::VectorXd& marginal);

double power_of(const EncoderView& enc, const Eigen::VectorXd& marginal);

struct CostReport {
    double D = 0.0;
    double P1 = 0.0;
    double P2 = 0.0;
    double H = 0.0;
    double J = 0.0;
    double F = 0.0;
};

CostReport cost_report(double D, double P1, double P2, double H, const LagrangeWeights& w,
                       double temperature);

/// Cost seen by one encoder while the decoder and the other encoder are fixed.
///
/// The pairwise tensor is contracted over the other side once, leaving an
/// N_x x N_y matrix; any candidate channel input for node i then costs one
/// lattice-window dot product. Values are q(x)-weighted:
///   node_cost(i, u) = sum_y w(y|u) W(i, y) + lambda q(x_i) u^2
/// and D + lambda P_self = sum_i [c0(i) + sum_k p(k|x_i) node_cost(i, g_k(x_i))].
class SideCost {
public:
    SideCost(const SourceModel& source, const NoiseModel& noise_self,
             const NoiseModel& noise_other, const DecoderTable& decoder,
             const EncoderView& other_enc, Side side, double lambda);

    double node_cost(Eigen::Index i, double u) const;
    /// q(x_i) d(k, x_i) for every node and model.
    Eigen::MatrixXd weighted_cost(const Eigen::MatrixXd& inputs) const;
    /// sum_i sum_k p(k|x_i) q(x_i) d(k, x_i) = D + lambda_self * P_self.
    double value(const EncoderView& enc) const;
    /// Same, with only column k of the inputs replaced.
    double value_with_column(const EncoderView& enc, Eigen::Index k,
                             const Eigen::VectorXd& column) const;
    /// Contribution of model k alone when its channel inputs are `column`:
    /// sum_i p(k|x_i) node_cost(i, column_i).
    double column_value(const EncoderView& enc, Eigen::Index k,
                        const Eigen::VectorXd& column) const;
    /// Per-node cost table d(k, x) (unweighted); flagged rows zero.
    Eigen::MatrixXd model_cost(const Eigen::MatrixXd& inputs) const;

    const Eigen::VectorXd& marginal() const { return marginal_; }
    const std::vector<bool>& flagged() const { return *flagged_; }
    double lambda() const { return lambda_; }
    Side side() const { return side_; }

private:
    Side side_;
    double lambda_;
    ChannelLattice lattice_;
    Eigen::MatrixXd w_;       // N_x x N_y
    Eigen::VectorXd c0_;      // N_x
    Eigen::VectorXd marginal_;
    const std::vector<bool>* flagged_;
    mutable std::vector<double> buf_;
};

/// Everything that stays fixed during one design run.
struct Problem {
    SourceModel source;
    NoiseModel noise1;
    NoiseModel noise2;
    LagrangeWeights weights;
};

/// Output lattice covering both encoders' reachable channel outputs.
OutputGrid covering_grid(const Problem& problem, const EncoderView& enc1, const EncoderView& enc2,
                         std::size_t n_y, double margin);

/// True when the lattice no longer covers the encoders plus noise, when a
/// hardened channel input leaves its inner 90%, or when it is more than
/// twice as wide as a fresh covering lattice.
bool grid_needs_rebuild(const OutputGrid& grid, const Problem& problem, const EncoderView& enc1,
                        const EncoderView& enc2, double margin);

/// Full cost of an encoder pair under a given decoder.
CostReport evaluate(const SourceModel& source, const NoiseModel& noise1, const NoiseModel& noise2,
                    const EncoderView& enc1, const EncoderView& enc2, const DecoderTable& decoder,
                    const LagrangeWeights& weights, double temperature);

CostReport evaluate(const Problem& problem, const EncoderView& enc1, const EncoderView& enc2,
                    const DecoderTable& decoder, double temperature);

DecoderTable compute_decoder(const Problem& problem, const EncoderView& enc1,
                             const EncoderView& enc2, const OutputGrid& grid);

}  // namespace zdam
