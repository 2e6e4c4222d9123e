#pragma once

// Training data: synthetic samplers, MNIST IDX ingestion, diameter estimates,
// rescaling for the bijectivity condition and CSV persistence.

#include "gen/common.hpp"
#include "gen/rff.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gen {

/// x_scaled = (x + shift) * factor, per dimension.
struct ScaleRecord {
    Vector shift;
    Vector factor;

    Matrix apply(const Matrix& X) const {
        return (X.rowwise() + shift.transpose()) * factor.asDiagonal();
    }
    Matrix invert(const Matrix& X) const {
        return (X * factor.cwiseInverse().asDiagonal()).rowwise() - shift.transpose();
    }
};

struct Dataset {
    Matrix points;  // N x d
    std::string name;
    std::optional<ScaleRecord> scale_applied;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dims() const { return points.cols(); }
};

inline void validate(const Dataset& ds) {
    if (ds.points.rows() < 1 || ds.points.cols() < 1) throw DataError("dataset '" + ds.name + "' is empty");
    if (!ds.points.allFinite()) throw DataError("dataset '" + ds.name + "' contains non-finite values");
}

// ---------------------------------------------------------------- mixtures

struct MixtureComponent {
    double weight = 0.0;
    Vector mean;
    Vector variance;  // diagonal covariance
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;

    Eigen::Index dims() const { return components.empty() ? 0 : components.front().mean.size(); }
};

inline void validate(const MixtureSpec& spec) {
    if (spec.components.empty()) throw ConfigError("mixture has no components");
    const auto d = spec.dims();
    if (d < 1) throw ConfigError("mixture component mean is empty");
    double total = 0.0;
    for (const auto& c : spec.components) {
        if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
        if (c.mean.size() != d || c.variance.size() != d)
            throw ConfigError("mixture components disagree on dimension");
        if (!(c.variance.array() > 0.0).all()) throw ConfigError("mixture variances must be positive");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights sum to " + std::to_string(total) + ", not 1");
}

/// 0.45 N(-0.6, 0.03) + 0.25 N(0.7, 0.02) + 0.3 N(0, 0.01). The second
/// argument of N(.,.) is a variance unless `second_is_std` is set.
inline MixtureSpec mixture_1d(bool second_is_std = false) {
    auto var = [&](double v) { return second_is_std ? v * v : v; };
    MixtureSpec s;
    s.components.push_back({0.45, Vector::Constant(1, -0.6), Vector::Constant(1, var(0.03))});
    s.components.push_back({0.25, Vector::Constant(1, 0.7), Vector::Constant(1, var(0.02))});
    s.components.push_back({0.30, Vector::Constant(1, 0.0), Vector::Constant(1, var(0.01))});
    return s;
}

/// Three equally weighted isotropic components at (-0.8, 0.2), (0.8, 0), (0, -0.5).
inline MixtureSpec mixture_2d(double variance = 0.01) {
    MixtureSpec s;
    const std::array<std::array<double, 2>, 3> means{{{-0.8, 0.2}, {0.8, 0.0}, {0.0, -0.5}}};
    for (std::size_t k = 0; k < means.size(); ++k) {
        Vector m(2);
        m << means[k][0], means[k][1];
        // Last weight absorbs rounding so the sum is exactly 1.
        const double w = k + 1 < means.size() ? 1.0 / 3.0 : 1.0 - 2.0 * (1.0 / 3.0);
        s.components.push_back({w, m, Vector::Constant(2, variance)});
    }
    return s;
}

struct MixtureSample {
    Dataset data;
    std::vector<int> component;  // which component produced each row
};

inline MixtureSample sample_mixture_labeled(const MixtureSpec& spec, Eigen::Index n, Rng& rng) {
    validate(spec);
    if (n < 1) throw ConfigError("sample_mixture: n must be >= 1");
    std::vector<double> w;
    for (const auto& c : spec.components) w.push_back(c.weight);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    MixtureSample out;
    out.data.points.resize(n, spec.dims());
    out.data.name = "mixture";
    out.component.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int k = pick(rng);
        out.component[static_cast<std::size_t>(i)] = k;
        const auto& c = spec.components[static_cast<std::size_t>(k)];
        for (Eigen::Index j = 0; j < spec.dims(); ++j)
            out.data.points(i, j) = c.mean(j) + std::sqrt(c.variance(j)) * normal(rng);
    }
    return out;
}

inline Dataset sample_mixture(const MixtureSpec& spec, Eigen::Index n, Rng& rng) {
    return sample_mixture_labeled(spec, n, rng).data;
}

// ---------------------------------------------------------------- S-shape
//
// Two three-quarter arcs of radius 0.75 centred at (0, 0.75) and (0, -0.75):
//   upper: (0.75 cos a, 0.75 + 0.75 sin a),  a = t,          t in [0, 3pi/2]
//   lower: (0.75 cos a, -0.75 + 0.75 sin a), a = pi/2 - t,   t in [0, 3pi/2]
// The upper arc runs from (0.75, 0.75) over the top to the origin, the lower
// one continues from the origin round to (-0.75, -0.75). Bounding box is
// [-0.75, 0.75] x [-1.5, 1.5]. Arms are picked with equal probability, t is
// uniform, then isotropic Gaussian noise is added.

inline constexpr double kSRadius = 0.75;

struct SArc {
    double cx, cy;
    double start;  // angle at t = 0
    double sweep;  // signed angular extent
};

inline constexpr std::array<SArc, 2> kSArcs{{{0.0, kSRadius, 0.0, 1.5 * kPi}, {0.0, -kSRadius, 0.5 * kPi, -1.5 * kPi}}};

inline Dataset sample_s_shape(Eigen::Index n, double noise_std, Rng& rng) {
    if (n < 1) throw ConfigError("sample_s_shape: n must be >= 1");
    if (noise_std < 0.0) throw ConfigError("sample_s_shape: noise_std must be >= 0");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset ds;
    ds.points.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& arc = kSArcs[unit(rng) < 0.5 ? 0 : 1];
        const double a = arc.start + arc.sweep * unit(rng);
        ds.points(i, 0) = arc.cx + kSRadius * std::cos(a);
        ds.points(i, 1) = arc.cy + kSRadius * std::sin(a);
        if (noise_std > 0.0) {
            ds.points(i, 0) += noise_std * normal(rng);
            ds.points(i, 1) += noise_std * normal(rng);
        }
    }
    std::ostringstream name;
    name << "s_shape(two 3/4-arcs r=0.75 centres (0,+-0.75); noise_std=" << noise_std << ")";
    ds.name = name.str();
    return ds;
}

/// Euclidean distance from p to the noiseless S curve.
inline double s_shape_distance(double x, double y) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& arc : kSArcs) {
        const double dx = x - arc.cx, dy = y - arc.cy;
        const double r = std::hypot(dx, dy);
        // Position of the polar angle within the arc's sweep, in [0, 1] when covered.
        double ang = std::atan2(dy, dx);
        double rel = (ang - arc.start) / arc.sweep;
        // Bring rel into the window by adding whole turns.
        const double turn = kTwoPi / std::abs(arc.sweep);
        while (rel < 0.0) rel += turn;
        while (rel > turn) rel -= turn;
        if (rel <= 1.0) {
            best = std::min(best, std::abs(r - kSRadius));
        }
        for (double t : {0.0, 1.0}) {
            const double a = arc.start + arc.sweep * t;
            best = std::min(best, std::hypot(x - (arc.cx + kSRadius * std::cos(a)), y - (arc.cy + kSRadius * std::sin(a))));
        }
    }
    return best;
}

// ---------------------------------------------------------------- MNIST IDX

class IdxError : public DataError {
public:
    enum class Kind { open_failed, bad_magic, truncated, dimension_mismatch };
    IdxError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxError(IdxError::Kind::open_failed, "cannot open '" + path.string() + "'");
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off, const std::string& path) {
    if (off + 4 > buf.size()) throw IdxError(IdxError::Kind::truncated, "'" + path + "' ends inside its header");
    return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) | (std::uint32_t(buf[off + 2]) << 8) |
           std::uint32_t(buf[off + 3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    out.write(b, 4);
}

}  // namespace detail

struct MnistData {
    Dataset images;
    std::vector<int> labels;
};

/// Reads the first `subset` images (and labels) in file order; pixels scaled by 1/255.
inline MnistData load_mnist_idx_labeled(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                                        Eigen::Index subset) {
    using K = IdxError::Kind;
    const auto img = detail::read_file(images_path);
    const auto lab = detail::read_file(labels_path);
    const std::string ip = images_path.string(), lp = labels_path.string();

    if (detail::read_be32(img, 0, ip) != kIdxImagesMagic)
        throw IdxError(K::bad_magic, "'" + ip + "' is not an IDX image file (bad magic)");
    if (detail::read_be32(lab, 0, lp) != kIdxLabelsMagic)
        throw IdxError(K::bad_magic, "'" + lp + "' is not an IDX label file (bad magic)");
    const std::uint32_t count = detail::read_be32(img, 4, ip);
    const std::uint32_t rows = detail::read_be32(img, 8, ip);
    const std::uint32_t cols = detail::read_be32(img, 12, ip);
    const std::uint32_t nlab = detail::read_be32(lab, 4, lp);
    if (count != nlab)
        throw IdxError(K::dimension_mismatch, "image count " + std::to_string(count) + " differs from label count " +
                                                  std::to_string(nlab));
    if (subset < 1 || static_cast<std::uint64_t>(subset) > count)
        throw IdxError(K::dimension_mismatch, "subset " + std::to_string(subset) + " outside [1, " +
                                                  std::to_string(count) + "]");
    const std::size_t pixels = std::size_t(rows) * cols;
    if (pixels == 0) throw IdxError(K::dimension_mismatch, "'" + ip + "' declares empty images");
    if (img.size() < 16 + std::size_t(count) * pixels)
        throw IdxError(K::truncated, "'" + ip + "' is truncated: " + std::to_string(img.size()) + " bytes for " +
                                         std::to_string(count) + " images");
    if (lab.size() < 8 + std::size_t(count)) throw IdxError(K::truncated, "'" + lp + "' is truncated");

    MnistData out;
    out.images.points.resize(subset, static_cast<Eigen::Index>(pixels));
    out.images.name = "mnist[" + std::to_string(subset) + "]";
    out.labels.resize(static_cast<std::size_t>(subset));
    for (Eigen::Index i = 0; i < subset; ++i) {
        const std::size_t base = 16 + std::size_t(i) * pixels;
        for (std::size_t j = 0; j < pixels; ++j)
            out.images.points(i, static_cast<Eigen::Index>(j)) = img[base + j] / 255.0;
        out.labels[static_cast<std::size_t>(i)] = lab[8 + std::size_t(i)];
    }
    return out;
}

inline Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                              Eigen::Index subset) {
    return load_mnist_idx_labeled(images_path, labels_path, subset).images;
}

/// Writes raw bytes as IDX image/label files (rows x cols images).
inline void write_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                            const std::vector<std::vector<unsigned char>>& images, const std::vector<unsigned char>& labels,
                            std::uint32_t rows, std::uint32_t cols) {
    std::ofstream img(images_path, std::ios::binary), lab(labels_path, std::ios::binary);
    if (!img || !lab) throw DataError("cannot write IDX files");
    detail::write_be32(img, kIdxImagesMagic);
    detail::write_be32(img, static_cast<std::uint32_t>(images.size()));
    detail::write_be32(img, rows);
    detail::write_be32(img, cols);
    for (const auto& im : images) img.write(reinterpret_cast<const char*>(im.data()), std::streamsize(im.size()));
    detail::write_be32(lab, kIdxLabelsMagic);
    detail::write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size()));
}

// ---------------------------------------------------------------- geometry

enum class DiameterMethod { exact_pairwise, range_norm_bound };

struct DiameterEstimate {
    double value = 0.0;
    DiameterMethod method = DiameterMethod::exact_pairwise;
};

inline constexpr Eigen::Index kExactDiameterLimit = 5000;

/// Exact max pairwise distance up to 5,000 points, per-dimension range norm above.
inline DiameterEstimate diameter_estimate(const Dataset& ds) {
    validate(ds);
    const Matrix& X = ds.points;
    DiameterEstimate est;
    if (X.rows() <= kExactDiameterLimit) {
        const RowMatrix R = X;
        double best = 0.0;
        for (Eigen::Index i = 0; i < R.rows(); ++i)
            for (Eigen::Index j = i + 1; j < R.rows(); ++j) best = std::max(best, (R.row(i) - R.row(j)).squaredNorm());
        const double exact = std::sqrt(best);
        est.value = exact;
        est.method = DiameterMethod::exact_pairwise;
    } else {
        const Vector range = X.colwise().maxCoeff() - X.colwise().minCoeff();
        est.value = range.norm();
        est.method = DiameterMethod::range_norm_bound;
    }
    return est;
}

inline constexpr double kBijectionTarget = 0.95 * kTwoPi;

/// Shrinks the data uniformly when the contraction condition fails so that
/// the product lands at 0.95 * 2 pi. Returns the input unchanged otherwise.
inline Dataset rescale_to_bijective(const Dataset& ds, const FeatureMap& fm) {
    const double diam = diameter_estimate(ds).value;
    const auto rep = check_bijection_conditions(fm, diam);
    Dataset out = ds;
    const Eigen::Index d = ds.dims();
    double s = 1.0;
    if (!rep.contraction_ok && rep.product_value > 0.0) s = kBijectionTarget / rep.product_value;
    ScaleRecord rec{Vector::Zero(d), Vector::Constant(d, s)};
    if (ds.scale_applied) {
        // Compose: new = (old_scaled) * s  =>  shift' = shift, factor' = factor * s.
        rec.shift = ds.scale_applied->shift;
        rec.factor = ds.scale_applied->factor * s;
    }
    out.points = ds.points * s;
    out.scale_applied = rec;
    return out;
}

// ---------------------------------------------------------------- CSV

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const Matrix& X, const std::vector<std::string>& header = {}) {
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    } else {
        for (Eigen::Index j = 0; j < X.cols(); ++j) out << (j ? "," : "") << 'x' << j;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) out << (j ? "," : "") << format_double(X(i, j));
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const Matrix& X, const std::vector<std::string>& header = {}) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_csv(out, X, header);
}

/// Reads a numeric CSV with one header row.
inline Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw DataError("'" + path.string() + "' line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("'" + path.string() + "' line " + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path.string() + "' has no data rows");
    Dataset ds;
    ds.name = path.filename().string();
    ds.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            ds.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    validate(ds);
    return ds;
}

}  // namespace gen
