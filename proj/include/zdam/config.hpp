#pragma once

// Experiment configuration: an INI-style file of `key = value` lines grouped
// in [sections], plus `section.key=value` overrides. Precedence is
// override > file > built-in default. Unknown sections or keys are errors.

#include "zdam/annealer.hpp"
#include "zdam/baselines.hpp"
#include "zdam/monte_carlo.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace zdam {

enum class Method { DA, Greedy, Ncr };
enum class WeightsMode { Individual, Total, Target };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct ExperimentConfig {
    SourceParams source{0.995, 1.0, 1.0};
    std::size_t n_x = 64;
    double x_span = 5.0;

    double noise_var = 0.1;
    std::size_t n_n = 9;
    double noise_span = 4.0;

    std::size_t n_y = 128;
    double margin = 0.1;

    WeightsMode weights_mode = WeightsMode::Total;
    double lambda = 0.02;
    double lambda1 = 0.02;
    double lambda2 = 0.02;
    /// Power targets for mode = target. With target_total > 0 a single total
    /// lambda is searched; otherwise lambda1 and lambda2 are searched for
    /// target_p1 and target_p2.
    double target_total = 0.0;
    double target_p1 = 0.0;
    double target_p2 = 0.0;
    double bisect_lo = 1e-4;
    double bisect_hi = 10.0;
    std::size_t bisect_iters = 20;
    double bisect_tol = 0.02;

    Method method = Method::DA;
    AnnealConfig anneal;
    GreedyOptions greedy;
    /// "linear" (power-matched identity-shaped map) or "random" (seeded affine map).
    std::string greedy_init = "random";
    NcrConfig ncr;

    std::size_t mc_samples = 1000000;

    std::uint64_t seed = 1;
    std::string out = "out";

    std::vector<double> sweep_lambdas;
    std::vector<double> sweep_targets;

    /// Throws ConfigError on inconsistent or out-of-range values.
    void validate() const;
};

/// Parses a configuration file; an empty path yields the defaults.
/// `overrides` hold "section.key=value" strings applied on top of the file.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

/// Same, from configuration text.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {});

/// Canonical text form of a configuration; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& config);

}  // namespace zdam
