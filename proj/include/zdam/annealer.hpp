#pragma once

// Deterministic annealing over piecewise-affine randomized encoders.

#include "zdam/baselines.hpp"
#include "zdam/codebook.hpp"
#include "zdam/objective.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace zdam {

struct AnnealConfig {
    /// Non-positive means "derive": T_init = t_init_scale * D0 and
    /// T_min = t_min_ratio * T_init, where D0 is the distortion of the
    /// initial state.
    double T_init = 0.0;
    double T_min = 0.0;
    double t_init_scale = 10.0;
    double t_min_ratio = 1e-5;
    double alpha = 0.95;
    double perturb_eps = 0.2;
    double inner_tol = 1e-5;
    std::size_t inner_max_iters = 50;
    double gd_step_init = 1.0;
    double gd_backtrack_factor = 0.5;
    std::size_t gd_max_iters = 10;
    std::size_t K1 = 4;
    std::size_t K2 = 4;
    std::uint64_t rng_seed = 1;

    /// Initial slope a0 = sqrt(P_target / var); non-positive means P_target = var.
    double p_target1 = 0.0;
    double p_target2 = 0.0;

    std::size_t n_y = 96;
    double margin = 0.1;
    double merge_tol = 0.05;
    /// Models with total association mass below this are left out of the cluster count.
    double active_mass = 1e-6;

    /// Run the hard-assignment descent after the last temperature.
    bool zero_temperature = true;
    std::size_t zero_max_sweeps = 2000;
    /// Relative per-sweep drop of J at which the hard-assignment descent stops.
    double zero_tol = 1e-6;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

struct AnnealRecord {
    double T = 0.0;
    CostReport cost;
    std::size_t clusters1 = 1;
    std::size_t clusters2 = 1;
    std::size_t inner_iters = 0;
    bool grid_rebuilt = false;
    /// F after every coordinate update of this temperature, in order.
    std::vector<double> f_trace;
};

struct AnnealReport {
    std::vector<AnnealRecord> records;
    /// Temperatures at which an encoder's cluster count went up.
    std::vector<double> critical_temperatures;
    double T_init = 0.0;
    double T_min = 0.0;
    double D0 = 0.0;
    /// Cost right after hardening and right after the zero-temperature descent.
    CostReport hardened;
    CostReport final_cost;
    std::size_t zero_sweeps = 0;
};

struct AnnealResult {
    /// Piecewise-affine encoders with one-hot associations at the end of cooling.
    RandomizedEncoder model1;
    RandomizedEncoder model2;
    /// Final deterministic encoders after the zero-temperature phase.
    GridEncoder enc1;
    GridEncoder enc2;
    DecoderTable decoder;
    AnnealReport report;
};

using RecordCallback = std::function<void(const AnnealRecord&)>;

struct EncoderPair {
    RandomizedEncoder enc1;
    RandomizedEncoder enc2;
};

EncoderPair init_state(const AnnealConfig& config, const SourceModel& source);

/// Adds independent U[-eps s, eps s] offsets to every a_k and b_k, with
/// s = mean |a| (floor 1e-3) for slopes and s = source_std for offsets.
RandomizedEncoder perturb(RandomizedEncoder enc, double eps, double source_std,
                          std::mt19937_64& rng);

/// Single-linkage classes of models under max(|da|, |db| / b_scale) <= merge_tol.
std::size_t cluster_count(const RandomizedEncoder& enc, double merge_tol, double b_scale = 1.0);

struct DescentOptions {
    double step_init = 1.0;
    double backtrack = 0.5;
    std::size_t max_iters = 10;
};

struct DescentResult {
    double f_before = 0.0;
    double f_after = 0.0;
    std::size_t accepted_steps = 0;
};

/// Cost of an encoder with model k's column of channel inputs replaced.
using ColumnCost = std::function<double(Eigen::Index k, const Eigen::VectorXd& column)>;

/// Central finite differences over (a_1..a_K, b_1..b_K), relative step 1e-4
/// with absolute floor 1e-6.
Eigen::VectorXd finite_difference_gradient(const RandomizedEncoder& enc,
                                           const Eigen::VectorXd& x_grid, const ColumnCost& cost);

/// Analytic gradient of E{g^2(X)} over (a_1..a_K, b_1..b_K).
Eigen::VectorXd power_gradient(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid,
                               const Eigen::VectorXd& marginal);

/// Finite-difference gradient of cost.value.
Eigen::VectorXd model_gradient(const SideCost& cost, const RandomizedEncoder& enc,
                               const Eigen::VectorXd& x_grid);

/// Preconditioned gradient descent with Armijo backtracking on the models of
/// one encoder, associations and decoder fixed. Never returns a higher cost.
DescentResult descend_models(const SideCost& cost, RandomizedEncoder& enc,
                             const Eigen::VectorXd& x_grid, const DescentOptions& options);

/// One model-descent pass over both encoders (first, then second).
void optimize_models(EncoderPair& pair, const Problem& problem, const DecoderTable& decoder,
                     const DescentOptions& options);

/// Hard-assignment descent from deterministic encoders: the greedy method
/// run to a relative tolerance of config.zero_tol.
GreedyResult zero_temperature_phase(const GridEncoder& enc1, const GridEncoder& enc2,
                                    const Problem& problem, const AnnealConfig& config,
                                    const OutputGrid* grid = nullptr);

/// Hardened encoder sampled on the source grid.
GridEncoder to_grid_encoder(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid);

/// Full annealing run. `on_record` is called once per temperature as soon
/// as that temperature has converged. Throws ConfigError before any
/// computation when the configuration is invalid and NumericError when the
/// free energy stops being finite.
AnnealResult anneal(const AnnealConfig& config, const Problem& problem,
                    const RecordCallback& on_record = {});

}  // namespace zdam
