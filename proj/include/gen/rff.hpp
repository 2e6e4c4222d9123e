#pragma once

// Reparameterized random Fourier features for the Gaussian kernel
//   K(x, x') = exp(-1/2 (x - x')^T S (x - x')),  S = diag(exp(2 * log_scale)).
//
// Random directions e_i ~ N(0, I) are drawn once and frozen; the kernel
// scale enters only through L = diag(exp(log_scale)), so the map
//   phi(x) = D^{-1/2} [cos(e_i^T L x), sin(e_i^T L x)]_{i=1..D}
// is differentiable in both x and log_scale. Output layout is the D cosine
// coordinates followed by the D sine coordinates.

#include "gen/common.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace gen {

class FeatureMap {
public:
    FeatureMap() = default;

    /// Takes ownership of fixed directions (D x d) and an initial log-scale (d).
    FeatureMap(RowMatrix directions, Vector log_scale, std::uint64_t seed = 0)
        : directions_(std::move(directions)), log_scale_(std::move(log_scale)), seed_(seed) {
        require(directions_.rows() >= 1 && directions_.cols() >= 1, "feature map needs D >= 1 and d >= 1");
        require(log_scale_.size() == directions_.cols(),
                "log_scale length " + std::to_string(log_scale_.size()) + " does not match input dimension " +
                    std::to_string(directions_.cols()));
        require(log_scale_.allFinite(), "log_scale must be finite");
    }

    Eigen::Index dims_in() const { return directions_.cols(); }
    Eigen::Index num_features() const { return directions_.rows(); }
    Eigen::Index dims_out() const { return 2 * directions_.rows(); }
    std::uint64_t seed() const { return seed_; }

    const RowMatrix& directions() const { return directions_; }
    const Vector& log_scale() const { return log_scale_; }
    /// Diagonal of L = Sigma^{1/2}.
    Vector scale() const { return log_scale_.array().exp(); }

    /// Only the kernel scale is trainable.
    Vector& mutable_log_scale() { return log_scale_; }

    /// Projections e_i^T L x for every row of X (n x d) -> n x D.
    Matrix projections(const Matrix& X) const {
        require(X.cols() == dims_in(), "input dimension mismatch in feature map");
        return (X * scale().asDiagonal()) * directions_.transpose();
    }

    /// Maps every row of X (n x d) to the unit hypersphere in R^{2D}; result n x 2D.
    Matrix map_batch(const Matrix& X) const {
        if (!X.allFinite()) throw NumericalError("feature map input contains non-finite values");
        const Matrix arg = projections(X);
        const double norm = 1.0 / std::sqrt(static_cast<double>(num_features()));
        Matrix out(X.rows(), dims_out());
        out.leftCols(num_features()) = arg.array().cos() * norm;
        out.rightCols(num_features()) = arg.array().sin() * norm;
        return out;
    }

    /// Given dLoss/dPhi for a batch (n x 2D), returns dLoss/dArg (n x D).
    Matrix projection_adjoint(const Matrix& arg, const Matrix& d_phi) const {
        require(d_phi.rows() == arg.rows() && d_phi.cols() == dims_out(), "feature gradient has wrong shape");
        const Eigen::Index D = num_features();
        const double norm = 1.0 / std::sqrt(static_cast<double>(D));
        return (-arg.array().sin() * d_phi.leftCols(D).array() + arg.array().cos() * d_phi.rightCols(D).array()) *
               norm;
    }

    /// Vector-Jacobian product w.r.t. the inputs: X (n x d), d_phi (n x 2D) -> n x d.
    Matrix input_vjp(const Matrix& X, const Matrix& d_phi) const {
        const Matrix g = projection_adjoint(projections(X), d_phi);
        return (g * directions_) * scale().asDiagonal();
    }

    /// Vector-Jacobian product w.r.t. log_scale, summed over the batch rows.
    Vector log_scale_vjp(const Matrix& X, const Matrix& d_phi) const {
        const Matrix g = projection_adjoint(projections(X), d_phi);
        const Matrix ge = g * directions_;  // n x d
        const Vector col = (ge.array() * X.array()).colwise().sum().transpose();
        return col.cwiseProduct(scale());
    }

private:
    RowMatrix directions_;
    Vector log_scale_;
    std::uint64_t seed_ = 0;
};

/// Draws D x d standard-normal directions from the seeded generator.
inline FeatureMap build_feature_map(Eigen::Index dims_in, Eigen::Index num_features, std::uint64_t seed,
                                    const Vector& initial_log_scale) {
    if (dims_in < 1 || num_features < 1) throw ShapeError("feature map needs dims_in >= 1 and num_features >= 1");
    if (initial_log_scale.size() != dims_in)
        throw ShapeError("initial_log_scale has length " + std::to_string(initial_log_scale.size()) +
                         ", expected " + std::to_string(dims_in));
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    RowMatrix E(num_features, dims_in);
    for (Eigen::Index i = 0; i < num_features; ++i)
        for (Eigen::Index j = 0; j < dims_in; ++j) E(i, j) = normal(rng);
    return FeatureMap(std::move(E), initial_log_scale, seed);
}

inline Vector map_point(const FeatureMap& fm, const Vector& x) {
    require(x.size() == fm.dims_in(), "map_point: input has length " + std::to_string(x.size()) + ", expected " +
                                          std::to_string(fm.dims_in()));
    return fm.map_batch(x.transpose()).row(0).transpose();
}

inline double approx_kernel(const FeatureMap& fm, const Vector& x, const Vector& x2) {
    return map_point(fm, x).dot(map_point(fm, x2));
}

/// Closed-form kernel exp(-1/2 u^T S u) for the map's current scale.
inline double exact_kernel(const FeatureMap& fm, const Vector& x, const Vector& x2) {
    const Vector u = (x - x2).cwiseProduct(fm.scale());
    return std::exp(-0.5 * u.squaredNorm());
}

/// d phi / d x at x, shape 2D x d.
inline Matrix map_jacobian_wrt_input(const FeatureMap& fm, const Vector& x) {
    require(x.size() == fm.dims_in(), "map_jacobian_wrt_input: input dimension mismatch");
    const Eigen::Index D = fm.num_features();
    const double norm = 1.0 / std::sqrt(static_cast<double>(D));
    const Matrix EL = fm.directions() * fm.scale().asDiagonal();  // rows e_i^T L
    const Vector arg = EL * x;
    Matrix J(2 * D, fm.dims_in());
    for (Eigen::Index i = 0; i < D; ++i) {
        J.row(i) = -norm * std::sin(arg(i)) * EL.row(i);
        J.row(D + i) = norm * std::cos(arg(i)) * EL.row(i);
    }
    return J;
}

/// d phi / d log_scale at x, shape 2D x d.
inline Matrix map_gradient_wrt_log_scale(const FeatureMap& fm, const Vector& x) {
    require(x.size() == fm.dims_in(), "map_gradient_wrt_log_scale: input dimension mismatch");
    const Eigen::Index D = fm.num_features();
    const double norm = 1.0 / std::sqrt(static_cast<double>(D));
    const Vector s = fm.scale();
    const Vector arg = fm.directions() * s.cwiseProduct(x);
    // d arg_i / d log_scale_j = E_ij * s_j * x_j
    const Matrix darg = fm.directions() * s.cwiseProduct(x).asDiagonal();
    Matrix J(2 * D, fm.dims_in());
    for (Eigen::Index i = 0; i < D; ++i) {
        J.row(i) = -norm * std::sin(arg(i)) * darg.row(i);
        J.row(D + i) = norm * std::cos(arg(i)) * darg.row(i);
    }
    return J;
}

struct BijectionReport {
    bool rank_ok = false;
    bool contraction_ok = false;
    double product_value = 0.0;
    Eigen::Index rank = 0;
};

/// Computable form of the bijectivity conditions: rank{e_i} = d and
/// ||L||_F * diameter * max_i ||e_i|| < 2 pi.
inline BijectionReport check_bijection_conditions(const FeatureMap& fm, double data_diameter) {
    require(data_diameter >= 0.0, "data diameter must be nonnegative");
    BijectionReport rep;
    Eigen::BDCSVD<Matrix> svd(Matrix(fm.directions()));
    const Vector& sv = svd.singularValues();
    const double tol = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
    rep.rank = (sv.array() > tol).count();
    rep.rank_ok = rep.rank == fm.dims_in();
    const double frob = fm.scale().norm();
    const double max_dir = fm.directions().rowwise().norm().maxCoeff();
    rep.product_value = frob * data_diameter * max_dir;
    rep.contraction_ok = rep.product_value < kTwoPi;
    return rep;
}

}  // namespace gen
