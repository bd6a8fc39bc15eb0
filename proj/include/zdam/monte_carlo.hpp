#pragma once

#include "zdam/baselines.hpp"
#include "zdam/codebook.hpp"

#include <cstddef>
#include <cstdint>

namespace zdam {

struct SourceParams {
    double rho = 0.0;
    double var1 = 1.0;
    double var2 = 1.0;
};

struct McResult {
    double D = 0.0;
    double stderr_D = 0.0;
    double P1 = 0.0;
    double P2 = 0.0;
    std::size_t samples = 0;
};

/// Simulates the continuous system: exact bivariate normal sources, exact
/// Gaussian channel noise, nearest-node encoder lookup on the source grids and
/// bilinear decoding. Throws ConfigError when n_samples < 1e4.
McResult monte_carlo_validate(const GridEncoder& enc1, const Eigen::VectorXd& x_grid_1,
                              const GridEncoder& enc2, const Eigen::VectorXd& x_grid_2,
                              const DecoderTable& decoder, const SourceParams& source,
                              double noise_var1, double noise_var2, std::size_t n_samples,
                              std::uint64_t seed);

/// Index of the grid node closest to x on a uniform grid (clamped to the ends).
Eigen::Index nearest_node(const Eigen::VectorXd& grid, double x);

}  // namespace zdam
