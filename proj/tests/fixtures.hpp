#pragma once

#include "zdam/codebook.hpp"
#include "zdam/numerics.hpp"
#include "zdam/objective.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace zdam::testing {

inline RandomizedEncoder linear_encoder(double a, double b, std::size_t n) {
    return make_encoder({AffineModel{a, b}}, n);
}

inline OutputGrid grid_for(const SourceModel& s, const EncoderView& e1, const EncoderView& e2,
                           const NoiseModel& n1, const NoiseModel& n2, std::size_t n_y,
                           double margin = 0.0) {
    return build_output_grid(input_range(e1.inputs, e1.assoc), n1,
                             input_range(e2.inputs, e2.assoc), n2, n_y, margin);
}

/// Random K-model encoder with random (normalized) associations.
inline RandomizedEncoder random_encoder(std::size_t k, std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> slope(-2.0, 2.0);
    std::uniform_real_distribution<double> offset(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<AffineModel> models;
    for (std::size_t m = 0; m < k; ++m) models.push_back({slope(rng), offset(rng)});
    RandomizedEncoder enc = make_encoder(std::move(models), n);
    for (Eigen::Index i = 0; i < enc.assoc.rows(); ++i) {
        for (Eigen::Index m = 0; m < enc.assoc.cols(); ++m) enc.assoc(i, m) = unit(rng) + 1e-3;
        enc.assoc.row(i) /= enc.assoc.row(i).sum();
    }
    return enc;
}

}  // namespace zdam::testing
