#pragma once

// Evaluation against known distributions: smoothed histograms, symmetric KL,
// exact 1-D Wasserstein-1, per-mode coverage and the random-feature kernel
// approximation sweep.

#include "gen/common.hpp"
#include "gen/data.hpp"
#include "gen/rff.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace gen {

struct Histogram {
    std::vector<double> edges;  // B + 1, strictly increasing
    std::vector<double> mass;   // B, sums to 1
    double laplace_alpha = 0.0;
};

inline std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
    require(bins >= 1 && hi > lo, "equal_width_edges: need bins >= 1 and hi > lo");
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    e.back() = hi;
    return e;
}

/// Left-inclusive bins; samples outside the range land in the end bins.
/// Smoothing adds alpha to every bin's relative frequency before renormalising.
inline Histogram build_histogram(std::span<const double> samples, std::vector<double> edges, double laplace_alpha) {
    if (samples.empty()) throw ShapeError("build_histogram: no samples");
    if (edges.size() < 2) throw ShapeError("build_histogram: need at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw ShapeError("build_histogram: edges must be strictly increasing");
    if (!(laplace_alpha >= 0.0)) throw ShapeError("build_histogram: alpha must be >= 0");
    const std::size_t B = edges.size() - 1;
    std::vector<double> counts(B, 0.0);
    for (double x : samples) {
        // upper_bound gives the first edge > x, so bin = that index - 1.
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        std::ptrdiff_t bin = std::distance(edges.begin(), it) - 1;
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(B) - 1);
        counts[static_cast<std::size_t>(bin)] += 1.0;
    }
    Histogram h;
    h.edges = std::move(edges);
    h.laplace_alpha = laplace_alpha;
    h.mass.resize(B);
    const double n = static_cast<double>(samples.size());
    const double total = 1.0 + laplace_alpha * static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) h.mass[i] = (counts[i] / n + laplace_alpha) / total;
    return h;
}

/// KL(p||q) + KL(q||p) in nats; both histograms need identical edges and positive mass.
inline double symmetric_kl(const Histogram& p, const Histogram& q) {
    if (p.edges != q.edges) throw ShapeError("symmetric_kl: histograms have different edges");
    double s = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
        const double a = p.mass[i], b = q.mass[i];
        if (a == b) continue;
        if (!(a > 0.0) || !(b > 0.0))
            throw ShapeError("symmetric_kl: zero-mass bin; use laplace_alpha > 0");
        s += (a - b) * std::log(a / b);
    }
    return s;
}

/// W1 between equal-size empirical measures: mean |a_(i) - b_(i)| over sorted samples.
inline double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ShapeError("wasserstein_1d: empty input");
    if (a.size() != b.size()) throw ShapeError("wasserstein_1d: sample counts differ; subsample first");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

/// Draws `n` of the given samples without replacement.
inline std::vector<double> subsample(std::span<const double> a, std::size_t n, Rng& rng) {
    require(n <= a.size(), "subsample: n exceeds sample count");
    std::vector<double> v(a.begin(), a.end());
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
        std::swap(v[i], v[pick(rng)]);
    }
    v.resize(n);
    return v;
}

/// W1 for unequal sizes: the larger set is subsampled down with `rng`.
inline double wasserstein_1d(std::span<const double> a, std::span<const double> b, Rng& rng) {
    if (a.size() == b.size()) return wasserstein_1d(a, b);
    if (a.size() > b.size()) {
        const auto s = subsample(a, b.size(), rng);
        return wasserstein_1d(s, b);
    }
    const auto s = subsample(b, a.size(), rng);
    return wasserstein_1d(a, s);
}

struct Mode {
    Vector mean;
    double radius = 0.0;
    double expected_weight = 0.0;
};

/// Fraction of sample rows within `radius` (Euclidean, inclusive) of each mode.
inline std::vector<double> mode_coverage(const Matrix& samples, const std::vector<Mode>& modes) {
    if (modes.empty()) throw ShapeError("mode_coverage: no modes");
    std::vector<double> out;
    for (const auto& m : modes) {
        require(m.mean.size() == samples.cols(), "mode_coverage: mode dimension mismatch");
        const Vector d = (samples.rowwise() - m.mean.transpose()).rowwise().norm();
        const auto hits = (d.array() <= m.radius).count();
        out.push_back(samples.rows() ? static_cast<double>(hits) / static_cast<double>(samples.rows()) : 0.0);
    }
    return out;
}

inline std::vector<Mode> modes_of(const MixtureSpec& spec, double radius) {
    std::vector<Mode> m;
    for (const auto& c : spec.components) m.push_back({c.mean, radius, c.weight});
    return m;
}

/// 100 equal bins over [min(mean - 4 sd), max(mean + 4 sd)] of a 1-D mixture.
inline std::vector<double> default_edges(const MixtureSpec& spec, std::size_t bins = 100) {
    require(spec.dims() == 1, "default_edges: mixture must be 1-D");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : spec.components) {
        const double sd = std::sqrt(c.variance(0));
        lo = std::min(lo, c.mean(0) - 4.0 * sd);
        hi = std::max(hi, c.mean(0) + 4.0 * sd);
    }
    return equal_width_edges(lo, hi, bins);
}

inline constexpr double kDefaultLaplaceAlpha = 1e-3;

// ---------------------------------------------------------------- kernel sweep

struct KernelErrorRow {
    Eigen::Index num_features = 0;
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
};

/// For each D, a fresh feature map (seeded from `seed` and D) is compared with
/// the closed-form Gaussian kernel over `n_pairs` uniform pairs in [-1, 1]^d.
/// Pairs come from their own stream, so a run with more pairs extends (not
/// replaces) the pair set of a shorter run.
inline std::vector<KernelErrorRow> kernel_error_sweep(Eigen::Index d, const Vector& sigma_diag,
                                                      const std::vector<Eigen::Index>& D_values, Eigen::Index n_pairs,
                                                      std::uint64_t seed) {
    if (D_values.empty()) throw ShapeError("kernel_error_sweep: no D values");
    require(sigma_diag.size() == d, "kernel_error_sweep: sigma has wrong length");
    require((sigma_diag.array() > 0.0).all(), "kernel_error_sweep: sigma must be positive");
    require(n_pairs >= 1, "kernel_error_sweep: need at least one pair");
    Rng pair_rng(mix_seed(seed, 0x9a17));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix A(n_pairs, d), B(n_pairs, d);
    for (Eigen::Index i = 0; i < n_pairs; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) A(i, j) = u(pair_rng);
        for (Eigen::Index j = 0; j < d; ++j) B(i, j) = u(pair_rng);
    }
    const Vector log_scale = (0.5 * sigma_diag.array().log()).matrix();
    Vector exact(n_pairs);
    for (Eigen::Index i = 0; i < n_pairs; ++i) {
        const Vector diff = (A.row(i) - B.row(i)).transpose();
        exact(i) = std::exp(-0.5 * diff.cwiseAbs2().dot(sigma_diag));
    }
    std::vector<KernelErrorRow> rows;
    for (auto D : D_values) {
        const FeatureMap fm = build_feature_map(d, D, mix_seed(seed, static_cast<std::uint64_t>(D)), log_scale);
        // phi(a).phi(b) = mean_i cos(w_i.(a - b)), so one cosine per direction suffices.
        const Matrix W = fm.directions() * fm.scale().asDiagonal();
        Vector err(n_pairs);
        constexpr Eigen::Index kChunk = 256;
        for (Eigen::Index s = 0; s < n_pairs; s += kChunk) {
            const Eigen::Index m = std::min(kChunk, n_pairs - s);
            const Matrix proj = (A.middleRows(s, m) - B.middleRows(s, m)) * W.transpose();
            const Vector approx = proj.array().cos().rowwise().mean();
            err.segment(s, m) = (approx - exact.segment(s, m)).cwiseAbs();
        }
        rows.push_back({D, err.maxCoeff(), err.mean()});
    }
    return rows;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need two or more points");
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]) - mx;
        sxy += a * (std::log(y[i]) - my);
        sxx += a * a;
    }
    return sxy / sxx;
}

}  // namespace gen
