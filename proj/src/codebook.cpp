#include "zdam/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace zdam {

Eigen::MatrixXd RandomizedEncoder::inputs(const Eigen::VectorXd& x_grid) const {
    Eigen::MatrixXd u(x_grid.size(), static_cast<Eigen::Index>(models.size()));
    for (std::size_t k = 0; k < models.size(); ++k) {
        u.col(static_cast<Eigen::Index>(k)) =
            (models[k].a * x_grid.array() + models[k].b).matrix();
    }
    return u;
}

RandomizedEncoder make_encoder(std::vector<AffineModel> models, std::size_t n_nodes) {
    RandomizedEncoder enc;
    const auto k = static_cast<Eigen::Index>(models.size());
    enc.models = std::move(models);
    enc.assoc = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_nodes), k,
                                          1.0 / static_cast<double>(k));
    return enc;
}

double eval_model(const RandomizedEncoder& enc, std::size_t k, double x) {
    if (k >= enc.models.size()) {
        throw std::out_of_range("eval_model: model index " + std::to_string(k) +
                                " out of range");
    }
    return enc.models[k](x);
}

HardenedEncoder harden(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid) {
    HardenedEncoder out;
    const Eigen::Index n = enc.assoc.rows();
    out.values.resize(n);
    out.indices.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < enc.assoc.cols(); ++k) {
            if (enc.assoc(i, k) > enc.assoc(i, best)) best = k;
        }
        out.indices[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
        out.values(i) = enc.models[static_cast<std::size_t>(best)](x_grid(i));
    }
    return out;
}

RandomizedEncoder harden_in_place(RandomizedEncoder enc) {
    for (Eigen::Index i = 0; i < enc.assoc.rows(); ++i) {
        Eigen::Index best = 0;
        enc.assoc.row(i).maxCoeff(&best);
        enc.assoc.row(i).setZero();
        enc.assoc(i, best) = 1.0;
    }
    return enc;
}

double encoder_power(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid,
                     const Eigen::VectorXd& marginal) {
    if (x_grid.size() != enc.assoc.rows() || marginal.size() != enc.assoc.rows() ||
        enc.assoc.cols() != static_cast<Eigen::Index>(enc.models.size())) {
        throw std::invalid_argument("encoder_power: grid and association sizes differ");
    }
    const Eigen::MatrixXd u = enc.inputs(x_grid);
    const Eigen::VectorXd per_node = enc.assoc.cwiseProduct(u.cwiseAbs2()).rowwise().sum();
    return marginal.dot(per_node);
}

InputRange input_range(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& assoc) {
    InputRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
            if (assoc(i, k) <= 1e-9) continue;
            r.lo = std::min(r.lo, inputs(i, k));
            r.hi = std::max(r.hi, inputs(i, k));
        }
    }
    if (r.lo > r.hi) r = {inputs.minCoeff(), inputs.maxCoeff()};
    return r;
}

namespace {

struct AxisPos {
    Eigen::Index i;
    double f;
};

AxisPos locate(const Eigen::VectorXd& grid, double y) {
    const Eigen::Index n = grid.size();
    const double t = (y - grid(0)) / grid_spacing(grid);
    if (!(t > 0.0)) return {0, 0.0};
    if (t >= static_cast<double>(n - 1)) return {n - 2, 1.0};
    const auto i = std::min(static_cast<Eigen::Index>(t), n - 2);
    return {i, t - static_cast<double>(i)};
}

double bilinear(const Eigen::MatrixXd& v, AxisPos p, AxisPos q) {
    const double a = v(p.i, q.i) * (1.0 - q.f) + v(p.i, q.i + 1) * q.f;
    const double b = v(p.i + 1, q.i) * (1.0 - q.f) + v(p.i + 1, q.i + 1) * q.f;
    return a * (1.0 - p.f) + b * p.f;
}

}  // namespace

std::pair<double, double> decode(const DecoderTable& table, double y1, double y2) {
    const AxisPos p = locate(table.grid.y_grid_1, y1);
    const AxisPos q = locate(table.grid.y_grid_2, y2);
    return {bilinear(table.xhat1, p, q), bilinear(table.xhat2, p, q)};
}

}  // namespace zdam
