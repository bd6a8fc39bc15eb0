#pragma once

// Descent baselines on unstructured encoders: greedy imposition of the
// necessary optimality conditions, and noisy channel relaxation around it.

#include "zdam/objective.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace zdam {

/// Encoder given directly by its channel input at each source node.
struct GridEncoder {
    Eigen::VectorXd values;
};

EncoderView view_of(const GridEncoder& enc);

struct GreedyOptions {
    double tol = 1e-6;
    std::size_t max_sweeps = 300;
    std::size_t n_y = 96;
    double margin = 0.1;
    /// Candidate values per node, spread over +-candidate_span output std devs.
    std::size_t candidates = 33;
    double candidate_span = 2.0;
    std::size_t golden_iters = 24;
};

struct SweepRecord {
    double j_before = 0.0;  // optimal decoder, start of sweep
    double j_after = 0.0;   // after node updates, same decoder
    double j_next = 0.0;    // after the decoder refresh
    bool grid_rebuilt = false;
};

struct GreedyResult {
    GridEncoder enc1;
    GridEncoder enc2;
    DecoderTable decoder;
    CostReport cost;
    std::vector<SweepRecord> sweeps;
    bool converged = false;
};

/// Alternates decoder refresh and pointwise encoder minimization until the
/// relative drop of J over a sweep is at most options.tol. Starts on
/// `grid` when given (it is still rebuilt if it stops covering the
/// encoders), otherwise on a fresh covering lattice. Throws NumericError on
/// a non-finite cost.
GreedyResult greedy_descend(const GridEncoder& init1, const GridEncoder& init2,
                            const Problem& problem, const GreedyOptions& options,
                            const OutputGrid* grid = nullptr);

struct NodeChoice {
    double value = 0.0;
    double cost = 0.0;
};

/// Best channel input for node i: the current value, `count` candidates over
/// [current - span, current + span], then golden-section refinement around
/// the winner. Candidates are kept inside [lo, hi]; the current value is
/// always admissible.
NodeChoice minimize_node(const SideCost& cost, Eigen::Index i, double current, double span,
                         double lo, double hi, const GreedyOptions& options);

struct NcrConfig {
    double sigma2_start = 1.0;
    double ncr_alpha = 0.7;
    std::size_t stages = 8;
};

/// Greedy descent tracked from an inflated noise variance down to the true
/// one. The last stage always runs at the problem's own noise variance.
GreedyResult ncr(const NcrConfig& config, const Problem& problem, const GridEncoder& init1,
                 const GridEncoder& init2, const GreedyOptions& options);

/// Noise variance used by each NCR stage.
std::vector<double> ncr_schedule(const NcrConfig& config, double true_var);

/// g(x) = slope * x + offset on the grid.
GridEncoder linear_grid_encoder(const Eigen::VectorXd& x_grid, double slope, double offset = 0.0);

/// Random affine start: slope sign and magnitude (0.5..1.5 of the power-matched
/// slope) and offset drawn from the seed.
GridEncoder random_grid_encoder(const Eigen::VectorXd& x_grid, double source_var, double power,
                                std::uint64_t seed);

}  // namespace zdam
