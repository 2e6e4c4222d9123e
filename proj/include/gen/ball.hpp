#pragma once

// Minimal enclosing ball in random-feature space, trained in its primal hinge form
//   J_d = lambda * r + (1/n) sum_i max(0, ||phi(x_i) - c||^2 - r),   r = R^2 >= 0,
// jointly over (r, c, log_scale). decision_value > 0 marks the inside of the
// learned data contour.

#include "gen/adam.hpp"
#include "gen/config.hpp"
#include "gen/rff.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace gen {

struct Ball {
    Vector center;          // length 2D
    double radius_sq = 0.0; // r = R^2
    double lambda = 1.0;
};

inline double hinge_violation(const Ball& b, const Vector& phi) {
    require(phi.size() == b.center.size(), "hinge_violation: feature vector length mismatch");
    return std::max(0.0, (phi - b.center).squaredNorm() - b.radius_sq);
}

/// Squared distances ||phi_i - c||^2 for every row of Phi.
inline Vector squared_distances(const Ball& b, const Matrix& Phi) {
    require(Phi.cols() == b.center.size(), "feature width does not match ball centre");
    return (Phi.rowwise() - b.center.transpose()).rowwise().squaredNorm();
}

inline Vector hinge_violations(const Ball& b, const Matrix& Phi) {
    return (squared_distances(b, Phi).array() - b.radius_sq).max(0.0).matrix();
}

inline double ball_objective(const Ball& b, const FeatureMap& fm, const Matrix& batch) {
    if (batch.rows() < 1) throw ShapeError("ball_objective: empty batch");
    return b.lambda * b.radius_sq + hinge_violations(b, fm.map_batch(batch)).mean();
}

struct BallGradients {
    double d_radius_sq = 0.0;
    Vector d_center;
    Vector d_log_scale;
    double objective = 0.0;
    Eigen::Index violators = 0;
};

/// Subgradient of ball_objective; the hinge kink (violation exactly 0) contributes 0.
inline BallGradients ball_gradients(const Ball& b, const FeatureMap& fm, const Matrix& batch) {
    const Eigen::Index n = batch.rows();
    if (n < 1) throw ShapeError("ball_gradients: empty batch");
    const Matrix Phi = fm.map_batch(batch);
    const Vector dist = squared_distances(b, Phi);
    const double inv_n = 1.0 / static_cast<double>(n);

    BallGradients g;
    g.d_center = Vector::Zero(b.center.size());
    Matrix d_phi = Matrix::Zero(n, Phi.cols());
    double hinge_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = dist(i) - b.radius_sq;
        if (v > 0.0) {
            ++g.violators;
            hinge_sum += v;
            const Vector diff = Phi.row(i).transpose() - b.center;
            d_phi.row(i) = (2.0 * inv_n) * diff.transpose();
            g.d_center -= (2.0 * inv_n) * diff;
        }
    }
    g.objective = b.lambda * b.radius_sq + hinge_sum * inv_n;
    g.d_radius_sq = b.lambda - static_cast<double>(g.violators) * inv_n;
    g.d_log_scale = g.violators > 0 ? fm.log_scale_vjp(batch, d_phi) : Vector::Zero(fm.dims_in());
    return g;
}

inline double decision_value(const Ball& b, const FeatureMap& fm, const Vector& x) {
    return b.radius_sq - (map_point(fm, x) - b.center).squaredNorm();
}

inline Vector decision_values(const Ball& b, const FeatureMap& fm, const Matrix& X) {
    return (b.radius_sq - squared_distances(b, fm.map_batch(X)).array()).matrix();
}

// ---------------------------------------------------------------- fitting

struct BallEpochStats {
    int epoch = 0;
    double objective = 0.0;     // J_d on the full dataset after the epoch
    double hinge_mean = 0.0;    // mean violation on the full dataset
    double violator_fraction = 0.0;
};

/// Centre = mean feature of the batch; r = 90th percentile of squared distances to it.
inline Ball init_ball(const FeatureMap& fm, const Matrix& first_batch, double lambda) {
    require(first_batch.rows() >= 1, "init_ball: empty batch");
    Ball b;
    b.lambda = lambda;
    const Matrix Phi = fm.map_batch(first_batch);
    b.center = Phi.colwise().mean().transpose();
    Vector dist = squared_distances(b, Phi);
    std::vector<double> d(dist.data(), dist.data() + dist.size());
    std::sort(d.begin(), d.end());
    const auto idx = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(d.size()))) - 1;
    b.radius_sq = d[std::min(idx, d.size() - 1)];
    return b;
}

inline AdamState make_ball_adam(const Ball& b, const FeatureMap& fm) {
    return AdamState({1, b.center.size(), fm.dims_in()});
}

/// Rows of X selected by idx[begin, end).
inline Matrix gather_rows(const Matrix& X, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Eigen::Index>(end - begin), X.cols());
    for (std::size_t k = begin; k < end; ++k) out.row(static_cast<Eigen::Index>(k - begin)) = X.row(idx[k]);
    return out;
}

inline std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    // Fisher-Yates with an explicit draw so the order is fixed by the generator alone.
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(rng)]);
    }
    return idx;
}

inline BallEpochStats evaluate_ball(const Ball& b, const FeatureMap& fm, const Matrix& data, int epoch) {
    const Vector h = hinge_violations(b, fm.map_batch(data));
    BallEpochStats s;
    s.epoch = epoch;
    s.hinge_mean = h.mean();
    s.objective = b.lambda * b.radius_sq + s.hinge_mean;
    s.violator_fraction = static_cast<double>((h.array() > 0.0).count()) / static_cast<double>(h.size());
    return s;
}

/// One pass over `data` in shuffled minibatches of cfg.batch_size. The
/// shuffle for the epoch is `order`; batches are consecutive slices of it.
inline void ball_epoch(Ball& b, FeatureMap& fm, const Matrix& data, const std::vector<Eigen::Index>& order,
                       const TrainConfig& cfg, AdamState& opt, int epoch) {
    const auto n = order.size();
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0, batch = 0; start < n; start += bs, ++batch) {
        const Matrix X = gather_rows(data, order, start, std::min(n, start + bs));
        const BallGradients g = ball_gradients(b, fm, X);
        if (!std::isfinite(g.objective) || !g.d_center.allFinite() || !g.d_log_scale.allFinite())
            throw NumericalError("non-finite ball objective at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch));
        adam_step(opt, {param_block(b.radius_sq), param_block(b.center), param_block(fm.mutable_log_scale())},
                  {grad_block(g.d_radius_sq), grad_block(g.d_center), grad_block(g.d_log_scale)}, cfg.lr_ball);
        b.radius_sq = std::max(b.radius_sq, 0.0);
    }
}

using BallEpochCallback = std::function<void(const BallEpochStats&)>;

/// Phase 1: cfg.phase1_epochs passes of minibatch Adam over (r, c, log_scale).
inline Ball fit_ball(FeatureMap& fm, const Matrix& data, const TrainConfig& cfg, AdamState& opt, Rng& rng,
                     const BallEpochCallback& on_epoch = {}) {
    if (data.rows() < 1) throw DataError("fit_ball: empty dataset");
    if (cfg.phase1_epochs < 1) throw ConfigError("fit_ball: phase1_epochs must be >= 1");
    Ball b;
    for (int epoch = 1; epoch <= cfg.phase1_epochs; ++epoch) {
        const auto order = shuffled_indices(data.rows(), rng);
        if (epoch == 1) {
            const auto first = std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.batch_size));
            b = init_ball(fm, gather_rows(data, order, 0, first), cfg.lambda);
            if (opt.m.empty()) opt = make_ball_adam(b, fm);
        }
        ball_epoch(b, fm, data, order, cfg, opt, epoch);
        const auto stats = evaluate_ball(b, fm, data, epoch);
        if (!std::isfinite(stats.objective))
            throw NumericalError("non-finite full-data ball objective after epoch " + std::to_string(epoch));
        if (on_epoch) on_epoch(stats);
    }
    return b;
}

// Convenience overload with an rng derived from the config seed.
inline Ball fit_ball(FeatureMap& fm, const Matrix& data, const TrainConfig& cfg, AdamState& opt) {
    Rng rng(derive_seed(cfg.seed, SeedStream::shuffling));
    return fit_ball(fm, data, cfg, opt, rng);
}

}  // namespace gen
