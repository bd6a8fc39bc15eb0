#include "zdam/objective.hpp"

#include "zdam/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace zdam {

namespace {

// Lattice weights beyond this many noise deviations are below exp(-50) and dropped.
constexpr double kNoiseReach = 10.0;

void fill_empty_nodes(Eigen::MatrixXd& x1, Eigen::MatrixXd& x2, const Eigen::MatrixXd& z,
                      std::size_t& filled) {
    const Eigen::Index n1 = z.rows();
    const Eigen::Index n2 = z.cols();
    std::vector<char> valid(static_cast<std::size_t>(n1 * n2), 0);
    std::deque<Eigen::Index> queue;
    for (Eigen::Index i = 0; i < n1; ++i) {
        for (Eigen::Index j = 0; j < n2; ++j) {
            if (z(i, j) >= kUnderflowFloor) {
                valid[static_cast<std::size_t>(i * n2 + j)] = 1;
                queue.push_back(i * n2 + j);
            }
        }
    }
    filled = static_cast<std::size_t>(n1 * n2) - queue.size();
    if (queue.empty()) {
        x1.setZero();
        x2.setZero();
        return;
    }
    // Multi-source breadth-first fill: each empty node copies the node it was reached from.
    while (!queue.empty()) {
        const Eigen::Index id = queue.front();
        queue.pop_front();
        const Eigen::Index i = id / n2;
        const Eigen::Index j = id % n2;
        const Eigen::Index di[4] = {-1, 1, 0, 0};
        const Eigen::Index dj[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
            const Eigen::Index a = i + di[d];
            const Eigen::Index b = j + dj[d];
            if (a < 0 || b < 0 || a >= n1 || b >= n2) continue;
            const auto slot = static_cast<std::size_t>(a * n2 + b);
            if (valid[slot]) continue;
            valid[slot] = 1;
            x1(a, b) = x1(i, j);
            x2(a, b) = x2(i, j);
            queue.push_back(a * n2 + b);
        }
    }
}

void check_view(const EncoderView& enc, Eigen::Index n, const char* who) {
    if (enc.inputs.rows() != n || enc.assoc.rows() != n || enc.inputs.cols() != enc.assoc.cols()) {
        throw std::invalid_argument(std::string(who) + ": encoder not aligned with source grid");
    }
}

}  // namespace

EncoderView view_of(const RandomizedEncoder& enc, const Eigen::VectorXd& x_grid) {
    return {enc.inputs(x_grid), enc.assoc};
}

ChannelLattice::ChannelLattice(const Eigen::VectorXd& y_grid, double noise_var)
    : y_(y_grid),
      y0_(y_grid(0)),
      step_(grid_spacing(y_grid)),
      inv_two_var_(0.5 / noise_var),
      reach_(kNoiseReach * std::sqrt(noise_var)) {}

void ChannelLattice::weights(double u, Eigen::Index& first, Eigen::Index& count,
                             double* out) const {
    const Eigen::Index n = y_.size();
    const double lo_t = std::ceil((u - reach_ - y0_) / step_);
    const double hi_t = std::floor((u + reach_ - y0_) / step_);
    const double near_t = std::round((u - y0_) / step_);
    const auto clampi = [n](double t) {
        return static_cast<Eigen::Index>(std::clamp(t, 0.0, static_cast<double>(n - 1)));
    };
    if (!(lo_t <= hi_t) || hi_t < 0.0 || lo_t > static_cast<double>(n - 1)) {
        first = clampi(near_t);
        count = 1;
        out[0] = 1.0;
        return;
    }
    first = clampi(lo_t);
    const Eigen::Index last = clampi(hi_t);
    count = last - first + 1;
    const Eigen::Index nearest = std::clamp(clampi(near_t), first, last);
    const double d0 = y_(nearest) - u;
    const double base = d0 * d0;
    // Consecutive weights differ by a factor whose log is linear in the node
    // index, so two exponentials seed the whole window.
    const double d_first = y_(first) - u;
    double e = std::exp(-(d_first * d_first - base) * inv_two_var_);
    double ratio = std::exp(-(2.0 * d_first * step_ + step_ * step_) * inv_two_var_);
    const double decay = std::exp(-2.0 * step_ * step_ * inv_two_var_);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < count; ++j) {
        out[j] = e;
        sum += e;
        e *= ratio;
        ratio *= decay;
    }
    const double inv = 1.0 / sum;
    for (Eigen::Index j = 0; j < count; ++j) out[j] *= inv;
}

Eigen::MatrixXd ChannelLattice::dense(const Eigen::MatrixXd& inputs) const {
    const Eigen::Index nx = inputs.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nx * inputs.cols(), y_.size());
    std::vector<double> buf(static_cast<std::size_t>(y_.size()));
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            Eigen::Index first = 0;
            Eigen::Index count = 0;
            weights(inputs(i, k), first, count, buf.data());
            for (Eigen::Index j = 0; j < count; ++j) out(k * nx + i, first + j) = buf[j];
        }
    }
    return out;
}

Eigen::MatrixXd ChannelLattice::mixed(const EncoderView& enc) const {
    const Eigen::Index nx = enc.inputs.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nx, y_.size());
    std::vector<double> buf(static_cast<std::size_t>(y_.size()));
    for (Eigen::Index k = 0; k < enc.inputs.cols(); ++k) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double p = enc.assoc(i, k);
            if (p == 0.0) continue;
            Eigen::Index first = 0;
            Eigen::Index count = 0;
            weights(enc.inputs(i, k), first, count, buf.data());
            for (Eigen::Index j = 0; j < count; ++j) out(i, first + j) += p * buf[j];
        }
    }
    return out;
}

DecoderTable compute_decoder(const SourceModel& source, const NoiseModel& noise1,
                             const NoiseModel& noise2, const EncoderView& enc1,
                             const EncoderView& enc2, const OutputGrid& grid) {
    check_view(enc1, source.q_joint.rows(), "compute_decoder");
    check_view(enc2, source.q_joint.cols(), "compute_decoder");
    const ChannelLattice lat1(grid.y_grid_1, noise1.var);
    const ChannelLattice lat2(grid.y_grid_2, noise2.var);
    const Eigen::MatrixXd a1 = lat1.mixed(enc1);  // N_x1 x N_y1
    const Eigen::MatrixXd a2 = lat2.mixed(enc2);  // N_x2 x N_y2

    // Factor through the N_x1 x N_y2 intermediates so the cost stays
    // O(N_x^2 N_y + N_x N_y^2).
    const Eigen::MatrixXd t0 = source.q_joint * a2;
    const Eigen::MatrixXd t1 = source.first_moment(1) * a2;
    const Eigen::MatrixXd t2 = source.first_moment(2) * a2;
    const Eigen::MatrixXd z = a1.transpose() * t0;

    DecoderTable table;
    table.grid = grid;
    table.xhat1 = a1.transpose() * t1;
    table.xhat2 = a1.transpose() * t2;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (z(i, j) >= kUnderflowFloor) {
                table.xhat1(i, j) /= z(i, j);
                table.xhat2(i, j) /= z(i, j);
            }
        }
    }
    fill_empty_nodes(table.xhat1, table.xhat2, z, table.filled_nodes);
    return table;
}

DistortionTensor compute_distortion_tensor(const SourceModel& source, const NoiseModel& noise1,
                                           const NoiseModel& noise2, const EncoderView& enc1,
                                           const EncoderView& enc2,
                                           const DecoderTable& decoder) {
    const Eigen::Index n1 = source.q_joint.rows();
    const Eigen::Index n2 = source.q_joint.cols();
    check_view(enc1, n1, "compute_distortion_tensor");
    check_view(enc2, n2, "compute_distortion_tensor");
    const ChannelLattice lat1(decoder.grid.y_grid_1, noise1.var);
    const ChannelLattice lat2(decoder.grid.y_grid_2, noise2.var);
    const Eigen::MatrixXd l1 = lat1.dense(enc1.inputs);  // K1 N_x1 x N_y1
    const Eigen::MatrixXd l2 = lat2.dense(enc2.inputs);  // K2 N_x2 x N_y2
    const Eigen::MatrixXd sq = decoder.xhat1.cwiseAbs2() + decoder.xhat2.cwiseAbs2();

    const Eigen::MatrixXd e1 = (l1 * decoder.xhat1) * l2.transpose();
    const Eigen::MatrixXd e2 = (l1 * decoder.xhat2) * l2.transpose();
    const Eigen::MatrixXd es = (l1 * sq) * l2.transpose();
    const Eigen::MatrixXd base =
        source.mean_1.cwiseAbs2() + source.mean_2.cwiseAbs2() + source.cell_var;

    DistortionTensor t;
    t.k1 = static_cast<std::size_t>(enc1.inputs.cols());
    t.k2 = static_cast<std::size_t>(enc2.inputs.cols());
    t.values.reserve(t.k1 * t.k2);
    for (std::size_t a = 0; a < t.k1; ++a) {
        for (std::size_t b = 0; b < t.k2; ++b) {
            const auto r = static_cast<Eigen::Index>(a) * n1;
            const auto c = static_cast<Eigen::Index>(b) * n2;
            Eigen::MatrixXd d = base - 2.0 * source.mean_1.cwiseProduct(e1.block(r, c, n1, n2)) -
                                2.0 * source.mean_2.cwiseProduct(e2.block(r, c, n1, n2)) +
                                es.block(r, c, n1, n2);
            t.values.push_back(d.cwiseMax(0.0));
        }
    }
    return t;
}

double expected_distortion(const DistortionTensor& tensor, const SourceModel& source,
                           const Eigen::MatrixXd& assoc1, const Eigen::MatrixXd& assoc2) {
    double d = 0.0;
    for (std::size_t a = 0; a < tensor.k1; ++a) {
        for (std::size_t b = 0; b < tensor.k2; ++b) {
            const Eigen::MatrixXd weighted = source.q_joint.cwiseProduct(tensor.slice(a, b));
            d += assoc1.col(static_cast<Eigen::Index>(a))
                     .dot(weighted * assoc2.col(static_cast<Eigen::Index>(b)));
        }
    }
    return d;
}

Eigen::MatrixXd conditional_model_cost(const DistortionTensor& tensor, const SourceModel& source,
                                       const Eigen::MatrixXd& other_assoc, double lambda,
                                       const Eigen::MatrixXd& self_inputs, Side side) {
    const bool first = side == Side::First;
    const std::size_t k_self = first ? tensor.k1 : tensor.k2;
    const std::size_t k_other = first ? tensor.k2 : tensor.k1;
    const Eigen::Index n = self_inputs.rows();
    const std::vector<bool>& flagged = first ? source.flagged_1 : source.flagged_2;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(k_self));
    for (std::size_t k = 0; k < k_self; ++k) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
        for (std::size_t m = 0; m < k_other; ++m) {
            const Eigen::MatrixXd& d = first ? tensor.slice(k, m) : tensor.slice(m, k);
            const auto mc = static_cast<Eigen::Index>(m);
            if (first) {
                // sum_j q(x2_j | x1_i) p(m | x2_j) D(i, j)
                acc += source.q_cond_2_given_1.cwiseProduct(d) * other_assoc.col(mc);
            } else {
                acc += source.q_cond_1_given_2.cwiseProduct(d.transpose()) * other_assoc.col(mc);
            }
        }
        const auto kc = static_cast<Eigen::Index>(k);
        out.col(kc) = acc + lambda * self_inputs.col(kc).cwiseAbs2();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (flagged[static_cast<std::size_t>(i)]) out.row(i).setZero();
    }
    return out;
}

Eigen::MatrixXd gibbs_update(const Eigen::MatrixXd& cost, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("gibbs_update: temperature must be > 0");
    Eigen::MatrixXd p(cost.rows(), cost.cols());
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        const double m = cost.row(i).minCoeff();
        double sum = 0.0;
        for (Eigen::Index k = 0; k < cost.cols(); ++k) {
            const double e = std::exp(-(cost(i, k) - m) / temperature);
            p(i, k) = e;
            sum += e;
        }
        p.row(i) /= sum;
    }
    return p;
}

double association_entropy(const Eigen::MatrixXd& assoc, const Eigen::VectorXd& marginal) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < assoc.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index k = 0; k < assoc.cols(); ++k) {
            const double p = assoc(i, k);
            if (p > 0.0) row -= p * std::log(p);
        }
        h += marginal(i) * row;
    }
    return h;
}

double compute_entropy(const Eigen::MatrixXd& assoc1, const Eigen::MatrixXd& assoc2,
                       const SourceModel& source) {
    return association_entropy(assoc1, source.q_marg_1) +
           association_entropy(assoc2, source.q_marg_2);
}

double power_of(const EncoderView& enc, const Eigen::VectorXd& marginal) {
    return marginal.dot(enc.assoc.cwiseProduct(enc.inputs.cwiseAbs2()).rowwise().sum());
}

CostReport cost_report(double D, double P1, double P2, double H, const LagrangeWeights& w,
                       double temperature) {
    CostReport r;
    r.D = D;
    r.P1 = P1;
    r.P2 = P2;
    r.H = H;
    r.J = D + w.lambda1 * P1 + w.lambda2 * P2;
    r.F = r.J - temperature * H;
    return r;
}

SideCost::SideCost(const SourceModel& source, const NoiseModel& noise_self,
                   const NoiseModel& noise_other, const DecoderTable& decoder,
                   const EncoderView& other_enc, Side side, double lambda)
    : side_(side),
      lambda_(lambda),
      lattice_(side == Side::First ? decoder.grid.y_grid_1 : decoder.grid.y_grid_2,
               noise_self.var) {
    const bool first = side == Side::First;
    const Eigen::VectorXd& y_other = first ? decoder.grid.y_grid_2 : decoder.grid.y_grid_1;
    const ChannelLattice lat_other(y_other, noise_other.var);
    const Eigen::MatrixXd a = lat_other.mixed(other_enc);
    const Eigen::MatrixXd sq = decoder.xhat1.cwiseAbs2() + decoder.xhat2.cwiseAbs2();
    Eigen::MatrixXd w;
    if (first) {
        check_view(other_enc, source.q_joint.cols(), "SideCost");
        const Eigen::MatrixXd r0 = source.q_joint * a;
        const Eigen::MatrixXd r1 = source.first_moment(1) * a;
        const Eigen::MatrixXd r2 = source.first_moment(2) * a;
        w = -2.0 * r1 * decoder.xhat1.transpose() - 2.0 * r2 * decoder.xhat2.transpose() +
            r0 * sq.transpose();
        marginal_ = source.q_marg_1;
        flagged_ = &source.flagged_1;
    } else {
        check_view(other_enc, source.q_joint.rows(), "SideCost");
        const Eigen::MatrixXd r0 = source.q_joint.transpose() * a;
        const Eigen::MatrixXd r1 = source.first_moment(1).transpose() * a;
        const Eigen::MatrixXd r2 = source.first_moment(2).transpose() * a;
        w = -2.0 * r1 * decoder.xhat1 - 2.0 * r2 * decoder.xhat2 + r0 * sq;
        marginal_ = source.q_marg_2;
        flagged_ = &source.flagged_2;
    }
    w_ = w.transpose();  // N_y x N_x: node columns are contiguous
    c0_ = source.strip_second_moment(side_index(side));
    buf_.resize(static_cast<std::size_t>(lattice_.size()));
}

double SideCost::node_cost(Eigen::Index i, double u) const {
    Eigen::Index first = 0;
    Eigen::Index count = 0;
    lattice_.weights(u, first, count, buf_.data());
    const double* col = w_.data() + i * w_.rows() + first;
    double s = 0.0;
    for (Eigen::Index j = 0; j < count; ++j) s += buf_[j] * col[j];
    return s + lambda_ * marginal_(i) * u * u;
}

Eigen::MatrixXd SideCost::weighted_cost(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd out(inputs.rows(), inputs.cols());
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
        for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
            out(i, k) = c0_(i) + node_cost(i, inputs(i, k));
        }
    }
    return out;
}

Eigen::MatrixXd SideCost::model_cost(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd out = weighted_cost(inputs);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        if ((*flagged_)[static_cast<std::size_t>(i)]) {
            out.row(i).setZero();
        } else {
            out.row(i) /= marginal_(i);
        }
    }
    return out;
}

double SideCost::value(const EncoderView& enc) const {
    double v = c0_.sum();
    for (Eigen::Index k = 0; k < enc.inputs.cols(); ++k) {
        for (Eigen::Index i = 0; i < enc.inputs.rows(); ++i) {
            const double p = enc.assoc(i, k);
            if (p == 0.0) continue;
            v += p * node_cost(i, enc.inputs(i, k));
        }
    }
    return v;
}

double SideCost::column_value(const EncoderView& enc, Eigen::Index k,
                              const Eigen::VectorXd& column) const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < enc.inputs.rows(); ++i) {
        const double p = enc.assoc(i, k);
        if (p == 0.0) continue;
        v += p * node_cost(i, column(i));
    }
    return v;
}

double SideCost::value_with_column(const EncoderView& enc, Eigen::Index k,
                                   const Eigen::VectorXd& column) const {
    double v = c0_.sum();
    for (Eigen::Index m = 0; m < enc.inputs.cols(); ++m) {
        for (Eigen::Index i = 0; i < enc.inputs.rows(); ++i) {
            const double p = enc.assoc(i, m);
            if (p == 0.0) continue;
            v += p * node_cost(i, m == k ? column(i) : enc.inputs(i, m));
        }
    }
    return v;
}

CostReport evaluate(const SourceModel& source, const NoiseModel& noise1, const NoiseModel& noise2,
                    const EncoderView& enc1, const EncoderView& enc2, const DecoderTable& decoder,
                    const LagrangeWeights& weights, double temperature) {
    const SideCost side(source, noise1, noise2, decoder, enc2, Side::First, 0.0);
    const double d = side.value(enc1);
    const double p1 = power_of(enc1, source.q_marg_1);
    const double p2 = power_of(enc2, source.q_marg_2);
    const double h = compute_entropy(enc1.assoc, enc2.assoc, source);
    CostReport r = cost_report(d, p1, p2, h, weights, temperature);
    if (!std::isfinite(r.F)) throw NumericError("evaluate: non-finite cost");
    return r;
}

CostReport evaluate(const Problem& problem, const EncoderView& enc1, const EncoderView& enc2,
                    const DecoderTable& decoder, double temperature) {
    return evaluate(problem.source, problem.noise1, problem.noise2, enc1, enc2, decoder,
                    problem.weights, temperature);
}

DecoderTable compute_decoder(const Problem& problem, const EncoderView& enc1,
                             const EncoderView& enc2, const OutputGrid& grid) {
    return compute_decoder(problem.source, problem.noise1, problem.noise2, enc1, enc2, grid);
}

OutputGrid covering_grid(const Problem& problem, const EncoderView& enc1, const EncoderView& enc2,
                         std::size_t n_y, double margin) {
    return build_output_grid(input_range(enc1.inputs, enc1.assoc), problem.noise1,
                             input_range(enc2.inputs, enc2.assoc), problem.noise2, n_y, margin);
}

namespace {

bool axis_stale(const Eigen::VectorXd& y, const EncoderView& enc, const NoiseModel& noise,
                double margin) {
    const InputRange r = input_range(enc.inputs, enc.assoc);
    const double lo = y(0);
    const double hi = y(y.size() - 1);
    if (r.lo + noise.min() < lo || r.hi + noise.max() > hi) return true;
    const double inner = 0.05 * (hi - lo);
    for (Eigen::Index i = 0; i < enc.inputs.rows(); ++i) {
        Eigen::Index k = 0;
        enc.assoc.row(i).maxCoeff(&k);
        const double v = enc.inputs(i, k);
        if (v < lo + inner || v > hi - inner) return true;
    }
    const Eigen::VectorXd fresh = build_output_axis(r, noise, 16, margin);
    return (hi - lo) > 2.0 * (fresh(fresh.size() - 1) - fresh(0));
}

}  // namespace

bool grid_needs_rebuild(const OutputGrid& grid, const Problem& problem, const EncoderView& enc1,
                        const EncoderView& enc2, double margin) {
    return axis_stale(grid.y_grid_1, enc1, problem.noise1, margin) ||
           axis_stale(grid.y_grid_2, enc2, problem.noise2, margin);
}

}  // namespace zdam
