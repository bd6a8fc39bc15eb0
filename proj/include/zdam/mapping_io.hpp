#pragma once

// Mapping dumps: JSON with everything needed to rebuild an encoder pair and
// its decoder, and a plot-ready CSV of the hardened encoders.

#include "zdam/baselines.hpp"
#include "zdam/codebook.hpp"

#include <optional>
#include <string>

namespace zdam {

struct MappingState {
    Eigen::VectorXd x_grid_1;
    Eigen::VectorXd x_grid_2;
    GridEncoder enc1;
    GridEncoder enc2;
    /// Piecewise-affine models and associations, when the method produced them.
    std::optional<RandomizedEncoder> model1;
    std::optional<RandomizedEncoder> model2;
    DecoderTable decoder;
};

/// Writes `path` (JSON). Throws std::runtime_error naming the path on I/O failure.
void dump_mapping(const MappingState& state, const std::string& path);

/// Writes the hardened encoders as CSV rows x1,g1,x2,g2 (one row per source node).
void dump_mapping_csv(const MappingState& state, const std::string& path);

/// Reads a JSON dump. Throws std::runtime_error on I/O or format errors.
MappingState load_mapping(const std::string& path);

}  // namespace zdam
