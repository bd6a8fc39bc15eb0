#include "zdam/monte_carlo.hpp"

#include "zdam/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace zdam {

Eigen::Index nearest_node(const Eigen::VectorXd& grid, double x) {
    const Eigen::Index n = grid.size();
    const double step = grid_spacing(grid);
    const double pos = std::round((x - grid(0)) / step);
    if (!(pos > 0.0)) return 0;
    if (pos >= static_cast<double>(n - 1)) return n - 1;
    return static_cast<Eigen::Index>(pos);
}

McResult monte_carlo_validate(const GridEncoder& enc1, const Eigen::VectorXd& x_grid_1,
                              const GridEncoder& enc2, const Eigen::VectorXd& x_grid_2,
                              const DecoderTable& decoder, const SourceParams& source,
                              double noise_var1, double noise_var2, std::size_t n_samples,
                              std::uint64_t seed) {
    if (n_samples < 10000) throw ConfigError("monte carlo: at least 1e4 samples are required");
    if (enc1.values.size() != x_grid_1.size() || enc2.values.size() != x_grid_2.size()) {
        throw ConfigError("monte carlo: encoder and grid lengths differ");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s1 = std::sqrt(source.var1);
    const double s2 = std::sqrt(source.var2);
    const double tail = std::sqrt(1.0 - source.rho * source.rho);
    const double n1 = std::sqrt(noise_var1);
    const double n2 = std::sqrt(noise_var2);

    // Welford accumulation keeps the variance estimate stable at 1e6+ samples.
    double mean = 0.0;
    double m2 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    for (std::size_t t = 0; t < n_samples; ++t) {
        const double z1 = normal(rng);
        const double z2 = source.rho * z1 + tail * normal(rng);
        const double x1 = s1 * z1;
        const double x2 = s2 * z2;
        const double u1 = enc1.values(nearest_node(x_grid_1, x1));
        const double u2 = enc2.values(nearest_node(x_grid_2, x2));
        const double y1 = u1 + n1 * normal(rng);
        const double y2 = u2 + n2 * normal(rng);
        const auto [h1, h2] = decode(decoder, y1, y2);
        const double err = (x1 - h1) * (x1 - h1) + (x2 - h2) * (x2 - h2);
        const double delta = err - mean;
        mean += delta / static_cast<double>(t + 1);
        m2 += delta * (err - mean);
        p1 += u1 * u1;
        p2 += u2 * u2;
    }
    const auto n = static_cast<double>(n_samples);
    McResult r;
    r.samples = n_samples;
    r.D = mean;
    r.stderr_D = std::sqrt(m2 / (n - 1.0) / n);
    r.P1 = p1 / n;
    r.P2 = p2 / n;
    return r;
}

}  // namespace zdam
