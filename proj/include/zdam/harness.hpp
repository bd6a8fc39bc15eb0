#pragma once

// Experiment orchestration: method dispatch, power-target search, metrics,
// Monte-Carlo validation and result files.

#include "zdam/annealer.hpp"
#include "zdam/baselines.hpp"
#include "zdam/config.hpp"
#include "zdam/mapping_io.hpp"
#include "zdam/monte_carlo.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace zdam {

double snr_db(double D);
double csnr_db(double P1, double P2, double noise_var);

Problem make_problem(const ExperimentConfig& config, const LagrangeWeights& weights);

struct MethodOutcome {
    GridEncoder enc1;
    GridEncoder enc2;
    std::optional<RandomizedEncoder> model1;
    std::optional<RandomizedEncoder> model2;
    DecoderTable decoder;
    CostReport cost;
    std::optional<AnnealReport> report;
    bool converged = true;
};

/// Runs the configured method once at fixed weights.
MethodOutcome run_method(const ExperimentConfig& config, const LagrangeWeights& weights,
                         std::uint64_t seed, const RecordCallback& on_record = {});

struct WeightSearch {
    LagrangeWeights weights;
    double P1 = 0.0;
    double P2 = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Log-scale bisection on the Lagrange weights until the powers reach their
/// targets within config.bisect_tol (relative). With target_total > 0 one
/// total weight is searched; otherwise lambda1 and lambda2 are bisected
/// side by side, each from its own power. `powers` maps weights to (P1, P2).
/// When the tolerance is not met the closest iterate is returned.
WeightSearch bisect_weights(const ExperimentConfig& config,
                            const std::function<std::pair<double, double>(const LagrangeWeights&)>& powers);

struct RunResult {
    std::string method;
    std::uint64_t seed = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double D = 0.0;
    double P1 = 0.0;
    double P2 = 0.0;
    double J = 0.0;
    double snr_db = 0.0;
    double csnr_db = 0.0;
    bool converged = true;
    bool weights_converged = true;
    std::size_t weight_iterations = 0;
    McResult mc;
    bool mc_within_3se = true;
    std::string mapping_file;
    std::string anneal_file;
};

struct Execution {
    RunResult result;
    MethodOutcome outcome;
};

/// Resolves the weights (searching them in target mode), runs the method and
/// validates it by simulation. Writes nothing.
Execution execute(const ExperimentConfig& config, std::uint64_t seed,
                  const RecordCallback& on_record = {});

/// execute() plus summary.json, mapping.json, mapping.csv and (for DA)
/// anneal.csv in `out_dir`, which is created when missing.
RunResult run(const ExperimentConfig& config, const std::string& out_dir);

/// One run per entry of config.sweep_lambdas (total weight) or, when that is
/// empty, per entry of config.sweep_targets (total power). Point i uses seed
/// config.seed + i and writes into out_dir/point_<i>; the curve goes to
/// out_dir/sweep.csv. Throws ConfigError when both lists are empty.
std::vector<RunResult> sweep(const ExperimentConfig& config, const std::string& out_dir);

std::string summary_json(const RunResult& result);
void write_summary(const RunResult& result, const std::string& path);
void write_anneal_csv(const AnnealReport& report, const std::string& path);
void write_sweep_csv(const std::vector<RunResult>& rows, const std::string& path);

}  // namespace zdam
