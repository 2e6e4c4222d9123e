// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria (0 when all pass).

#include "gen/cli.hpp"

#include "../oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace gen;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- thresholds

constexpr double kUnitNormTol = 1e-9;
constexpr int kUnitNormInputs = 1000;
constexpr double kUnitNormSeconds = 1.0;

constexpr Eigen::Index kSweepPairs = 10000;
constexpr int kSweepSeeds = 5;
constexpr double kSlopeLo = -0.65, kSlopeHi = -0.35;
constexpr double kSweepSeconds = 30.0;

constexpr int kGradConfigs = 100;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFloor = 1e-3;  // relative error denominator never drops below this
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 60.0;

constexpr double kInsideTol = -1e-6;
constexpr double kInsideFraction = 0.90;
constexpr double kDecreaseFraction = 0.90;
constexpr double kBallSeconds = 30.0;

constexpr Eigen::Index kGenSamples = 10000;
constexpr double kWindow1d = 0.15;
constexpr double kCoverage1d = 0.10;
constexpr double kMaxW1 = 0.10;
constexpr double kMaxKl = 1.0;

constexpr double kRadius2d = 0.3;
constexpr double kCoverage2d = 0.05;

constexpr double kSGenTol = -0.05;
constexpr double kSGenFraction = 0.80;
constexpr Eigen::Index kGridRes = 100;
constexpr double kGridX0 = -2.0, kGridX1 = 2.0, kGridY0 = -2.5, kGridY1 = 2.5;
constexpr double kTruthPositive = 0.90;
constexpr int kProbes = 500;
constexpr double kProbeDistance = 0.5;
constexpr double kProbeNegative = 0.80;

constexpr double kHingeDrop = 0.5;
constexpr Eigen::Index kHingeNoise = 1000;
constexpr double kMnistSeconds = 30.0 * 60.0;

constexpr int kBijectionCases = 200;

constexpr std::uint64_t kEvalSeed = 20240611;

// ---------------------------------------------------------------- harness

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path config_path(const std::string& name) { return fs::path(GEN_SOURCE_DIR) / "configs" / name; }

// A training run on a bundled config with the untrained and final checkpoints kept.
struct Run {
    RunConfig rc;
    Dataset data;
    Checkpoint untrained;  // end of phase 1: fitted ball, generator at initialisation
    Checkpoint final;
    std::vector<EpochRecord> records;
    double seconds = 0.0;
};

Run train_config(const std::string& name) {
    const auto t0 = std::chrono::steady_clock::now();
    Run r;
    r.rc = load_run_config(config_path(name));
    cli::absolutize_paths(r.rc);
    r.data = load_dataset(r.rc);
    const int p1 = r.rc.train.phase1_epochs;
    TrainHooks capture;
    capture.want_checkpoints = true;
    capture.on_epoch = [&](const EpochRecord& rec, const Checkpoint& ck) {
        r.records.push_back(rec);
        if (rec.epoch == p1) r.untrained = ck;
    };
    r.final = train(r.data, r.rc.train, capture, config_echo(r.rc));
    r.seconds = seconds_since(t0);
    return r;
}

Matrix fixed_noise(const Checkpoint& ck, Eigen::Index n) {
    Rng rng(kEvalSeed);
    return sample_noise(ck.config.noise, n, rng);
}

// Generated samples in data coordinates for a fixed noise matrix.
Matrix generate_from(const Checkpoint& ck, const Matrix& Z) {
    Matrix Y = ck.generator(Z);
    if (ck.scale_applied) Y = ck.scale_applied->invert(Y);
    return Y;
}

std::vector<double> column(const Matrix& X) { return {X.data(), X.data() + X.rows()}; }

// ---------------------------------------------------------------- 1

Verdict unit_norm() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1);
    std::normal_distribution<double> g(0.0, 3.0);
    double worst = 0.0;
    for (Eigen::Index d : {1, 2, 784}) {
        const auto fm = build_feature_map(d, 100, 10 + static_cast<std::uint64_t>(d), Vector::Zero(d));
        Matrix X(kUnitNormInputs, d);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
        const Vector n2 = fm.map_batch(X).rowwise().squaredNorm();
        worst = std::max(worst, (n2.array() - 1.0).abs().maxCoeff());
    }
    const double s = seconds_since(t0);
    return {worst < kUnitNormTol && s < kUnitNormSeconds,
            fmt("max |norm^2 - 1| = %.2e (< %.0e) over %d inputs x d in {1,2,784}; %.3f s (< %.0f s)", worst,
                kUnitNormTol, kUnitNormInputs, s, kUnitNormSeconds)};
}

// ---------------------------------------------------------------- 2

Verdict kernel_sweep() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<Eigen::Index> Ds{10, 100, 1000, 10000};
    std::vector<double> mean_err(Ds.size(), 0.0);
    bool monotone = true;
    std::string maxes;
    for (int seed = 0; seed < kSweepSeeds; ++seed) {
        const auto rows = kernel_error_sweep(2, Vector::Ones(2), Ds, kSweepPairs, static_cast<std::uint64_t>(seed));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            mean_err[k] += rows[k].mean_abs_error / kSweepSeeds;
            if (k > 0 && rows[k].max_abs_error > rows[k - 1].max_abs_error) monotone = false;
        }
        maxes += fmt(" s%d[%.3f %.3f %.3f %.4f]", seed, rows[0].max_abs_error, rows[1].max_abs_error,
                     rows[2].max_abs_error, rows[3].max_abs_error);
    }
    const std::vector<double> x(Ds.begin(), Ds.end());
    const double slope = loglog_slope(x, mean_err);
    const double s = seconds_since(t0);
    const bool ok = monotone && slope >= kSlopeLo && slope <= kSlopeHi && s < kSweepSeconds;
    return {ok, fmt("max error nonincreasing: %s;%s; slope of seed-mean mean error = %.3f (in [%.2f, %.2f]); "
                    "%.1f s (< %.0f s)",
                    monotone ? "yes" : "no", maxes.c_str(), slope, kSlopeLo, kSlopeHi, s, kSweepSeconds)};
}

// ---------------------------------------------------------------- 3

Eigen::VectorXd flatten(Generator& g) {
    Eigen::VectorXd v(g.num_params());
    Eigen::Index k = 0;
    for (auto& b : param_blocks(g)) {
        v.segment(k, b.size()) = b;
        k += b.size();
    }
    return v;
}

void unflatten(Generator& g, const Eigen::VectorXd& v) {
    Eigen::Index k = 0;
    for (auto& b : param_blocks(g)) {
        b = v.segment(k, b.size());
        k += b.size();
    }
}

Eigen::VectorXd flatten(const GeneratorGrads& gr) {
    std::vector<double> out;
    for (const auto& b : grad_blocks(gr)) out.insert(out.end(), b.data(), b.data() + b.size());
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd flat(const Matrix& M) { return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size()); }

// Central differences of a vector function, one column per input coordinate.
Matrix jacobian_fd(const std::function<Vector(const Vector&)>& f, const Vector& at) {
    Matrix J(f(at).size(), at.size());
    Vector p = at;
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        p(j) = at(j) + kGradStep;
        const Vector up = f(p);
        p(j) = at(j) - kGradStep;
        const Vector down = f(p);
        p(j) = at(j);
        J.col(j) = (up - down) / (2.0 * kGradStep);
    }
    return J;
}

// Features recomputed per row and per coordinate, no batched library path.
Vector features_by_loop(const RowMatrix& E, const Vector& log_scale, const Vector& x) {
    const Eigen::Index D = E.rows();
    Vector phi(2 * D);
    for (Eigen::Index i = 0; i < D; ++i) {
        double a = 0.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) a += E(i, j) * std::exp(log_scale(j)) * x(j);
        phi(i) = std::cos(a) / std::sqrt(static_cast<double>(D));
        phi(D + i) = std::sin(a) / std::sqrt(static_cast<double>(D));
    }
    return phi;
}

double ball_objective_by_loop(const RowMatrix& E, const Vector& ls, const Vector& c, double r, double lambda,
                              const Matrix& X) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        s += std::max(0.0, (features_by_loop(E, ls, X.row(i).transpose()) - c).squaredNorm() - r);
    return lambda * r + s / static_cast<double>(X.rows());
}

double loss_by_loop(const FeatureMap& fm, const Ball& b, const Generator& g, const Matrix& Z, const Matrix& X,
                    double w) {
    const Matrix Y = g(Z);
    Vector mg = Vector::Zero(fm.dims_out()), mx = Vector::Zero(fm.dims_out());
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        const Vector phi = features_by_loop(fm.directions(), fm.log_scale(), Y.row(i).transpose());
        mg += phi / static_cast<double>(Y.rows());
        hinge += std::max(0.0, (phi - b.center).squaredNorm() - b.radius_sq) / static_cast<double>(Y.rows());
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        mx += features_by_loop(fm.directions(), fm.log_scale(), X.row(i).transpose()) / static_cast<double>(X.rows());
    return hinge + w * (mx - mg).squaredNorm();
}

// Radius halfway between two adjacent sorted distances; nullopt when they nearly coincide (a kink).
std::optional<double> radius_between(const Vector& dist, std::size_t k) {
    std::vector<double> s(dist.data(), dist.data() + dist.size());
    std::sort(s.begin(), s.end());
    if (s[k] - s[k - 1] < 1e-3) return std::nullopt;
    return 0.5 * (s[k - 1] + s[k]);
}

Verdict gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> pick_d(1, 3), pick_D(3, 12), pick_w(2, 6);
    double worst[5] = {0, 0, 0, 0, 0};
    int done = 0, attempts = 0;
    const char* names[5] = {"input Jacobian", "log-scale Jacobian", "ball", "generator backprop", "generator_loss"};
    while (done < kGradConfigs && attempts < 4 * kGradConfigs) {
        ++attempts;
        const Eigen::Index d = pick_d(rng), D = pick_D(rng);
        Vector ls(d);
        for (Eigen::Index j = 0; j < d; ++j) ls(j) = 0.3 * g(rng);
        const auto fm = build_feature_map(d, D, 1000 + static_cast<std::uint64_t>(attempts), ls);
        const RowMatrix E = fm.directions();
        Vector x(d);
        for (Eigen::Index j = 0; j < d; ++j) x(j) = g(rng);

        const Matrix Jx = jacobian_fd([&](const Vector& p) { return features_by_loop(E, ls, p); }, x);
        const Matrix Jl = jacobian_fd([&](const Vector& p) { return features_by_loop(E, p, x); }, ls);

        Matrix X(8, d);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
        Ball b;
        b.lambda = 0.2 + std::abs(g(rng));
        b.center = fm.map_batch(X).colwise().mean().transpose();
        for (Eigen::Index k = 0; k < b.center.size(); ++k) b.center(k) += 0.05 * g(rng);
        const auto r = radius_between(squared_distances(b, fm.map_batch(X)), 4);
        if (!r) continue;
        b.radius_sq = *r;
        const auto an = ball_gradients(b, fm, X);
        Eigen::VectorXd pb(1 + 2 * D + d), gb(1 + 2 * D + d);
        pb << b.radius_sq, b.center, ls;
        gb << an.d_radius_sq, an.d_center, an.d_log_scale;
        const Eigen::VectorXd fb = oracle::central_difference(
            [&](const Eigen::VectorXd& p) {
                return ball_objective_by_loop(E, p.tail(d), p.segment(1, 2 * D), p(0), b.lambda, X);
            },
            pb, kGradStep);

        const Eigen::Index noise = pick_d(rng);
        const Activation out = attempts % 2 ? Activation::sigmoid : Activation::identity;
        auto gen = build_generator(noise, {{pick_w(rng), Activation::softplus}, {pick_w(rng), Activation::softplus}, {d, out}},
                                   5000 + static_cast<std::uint64_t>(attempts));
        Matrix Z(6, noise), U(6, d);
        for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = g(rng);
        const Eigen::VectorXd p0 = flatten(gen);
        const Eigen::VectorXd ga = flatten(gen.backward(gen.forward(Z), U));
        const Eigen::VectorXd fg = oracle::central_difference(
            [&](const Eigen::VectorXd& p) {
                Generator h = gen;
                unflatten(h, p);
                return (h(Z).array() * U.array()).sum();
            },
            p0, kGradStep);

        Ball bg = b;
        const auto rg = radius_between(squared_distances(bg, fm.map_batch(gen(Z))), 3);
        if (!rg) continue;
        bg.radius_sq = *rg;
        const double w = done % 3 == 0 ? 0.0 : 2.5;
        const Eigen::VectorXd la = flatten(generator_loss(fm, bg, gen, Z, X, w).grads);
        const Eigen::VectorXd fl = oracle::central_difference(
            [&](const Eigen::VectorXd& p) {
                Generator h = gen;
                unflatten(h, p);
                return loss_by_loop(fm, bg, h, Z, X, w);
            },
            p0, kGradStep);

        const double errs[5] = {oracle::max_relative_error(flat(map_jacobian_wrt_input(fm, x)), flat(Jx), kGradFloor),
                                oracle::max_relative_error(flat(map_gradient_wrt_log_scale(fm, x)), flat(Jl), kGradFloor),
                                oracle::max_relative_error(gb, fb, kGradFloor),
                                oracle::max_relative_error(ga, fg, kGradFloor),
                                oracle::max_relative_error(la, fl, kGradFloor)};
        for (int k = 0; k < 5; ++k) worst[k] = std::max(worst[k], errs[k]);
        ++done;
    }
    const double s = seconds_since(t0);
    bool ok = done >= kGradConfigs && s < kGradSeconds;
    std::string detail = fmt("%d configs (>= %d);", done, kGradConfigs);
    for (int k = 0; k < 5; ++k) {
        ok = ok && worst[k] < kGradRelTol;
        detail += fmt(" %s %.1e;", names[k], worst[k]);
    }
    detail += fmt(" tol %.0e relative (floor %.0e); %.1f s (< %.0f s)", kGradRelTol, kGradFloor, s, kGradSeconds);
    return {ok, detail};
}

// ---------------------------------------------------------------- 4

Verdict ball_fit() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig rc = load_run_config(config_path("gaussian_ball.cfg"));
    const Dataset data = load_dataset(rc);
    const int p1 = rc.train.phase1_epochs;
    std::vector<double> J;
    Checkpoint fitted;
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& rec, const Checkpoint& ck) {
        if (rec.phase == 1) J.push_back(rec.objective);
        if (rec.epoch == p1) fitted = ck;
    };
    rc.train.total_epochs = p1 + 1;  // the generator epoch is irrelevant here
    train(data, rc.train, hooks, config_echo(rc));
    const Vector v = decision_values(fitted.ball, fitted.feature_map, data.points);
    const double inside = static_cast<double>((v.array() >= kInsideTol).count()) / static_cast<double>(v.size());
    int down = 0;
    for (std::size_t i = 1; i < J.size(); ++i) down += J[i] < J[i - 1];
    const double frac_down = static_cast<double>(down) / static_cast<double>(J.size() - 1);
    const double s = seconds_since(t0);
    return {inside >= kInsideFraction && frac_down >= kDecreaseFraction && s < kBallSeconds,
            fmt("n = %ld, lambda = %.2f, D = %ld, %d epochs, batch %ld: inside %.3f (>= %.2f), J decreased in %.3f of "
                "epochs (>= %.2f); %.1f s (< %.0f s)",
                static_cast<long>(data.size()), rc.train.lambda, static_cast<long>(rc.train.num_features), p1,
                static_cast<long>(rc.train.batch_size), inside, kInsideFraction, frac_down, kDecreaseFraction, s,
                kBallSeconds)};
}

// ---------------------------------------------------------------- 5, 6

Verdict coverage_1d(const Run& r) {
    const Matrix Y = generate_from(r.final, fixed_noise(r.final, kGenSamples));
    const auto cov = mode_coverage(Y, modes_of(*mixture_of(r.rc.dataset), kWindow1d));
    bool ok = true;
    for (double c : cov) ok = ok && c >= kCoverage1d;
    return {ok, fmt("windows mean +- %.2f hold %.3f, %.3f, %.3f of %ld samples (each >= %.2f); training %.1f s",
                    kWindow1d, cov[0], cov[1], cov[2], static_cast<long>(kGenSamples), kCoverage1d, r.seconds)};
}

Verdict distances_1d(const Run& r) {
    const auto mix = *mixture_of(r.rc.dataset);
    Rng truth_rng(kEvalSeed + 1);
    const auto truth = column(sample_mixture(mix, kGenSamples, truth_rng).points);
    const Matrix Z = fixed_noise(r.final, kGenSamples);
    const auto trained = column(generate_from(r.final, Z));
    const auto untrained = column(generate_from(r.untrained, Z));
    const auto edges = default_edges(mix);
    const auto ht = build_histogram(truth, edges, kDefaultLaplaceAlpha);
    const double kl = symmetric_kl(build_histogram(trained, edges, kDefaultLaplaceAlpha), ht);
    const double kl0 = symmetric_kl(build_histogram(untrained, edges, kDefaultLaplaceAlpha), ht);
    const double w = wasserstein_1d(trained, truth), w0 = wasserstein_1d(untrained, truth);
    return {w < kMaxW1 && kl < kMaxKl && w < w0 && kl < kl0,
            fmt("W1 %.4f (< %.2f, untrained %.4f), symmetric KL %.4f (< %.1f, untrained %.4f); 100 bins, alpha %.0e",
                w, kMaxW1, w0, kl, kMaxKl, kl0, kDefaultLaplaceAlpha)};
}

// ---------------------------------------------------------------- 7

Verdict coverage_2d(const Run& r) {
    const Matrix Y = generate_from(r.final, fixed_noise(r.final, kGenSamples));
    const auto cov = mode_coverage(Y, modes_of(*mixture_of(r.rc.dataset), kRadius2d));
    bool ok = true;
    for (double c : cov) ok = ok && c >= kCoverage2d;
    return {ok, fmt("radius %.1f around the three means holds %.3f, %.3f, %.3f (each >= %.2f); training %.1f s", kRadius2d,
                    cov[0], cov[1], cov[2], kCoverage2d, r.seconds)};
}

// ---------------------------------------------------------------- 8

// Bilinear interpolation of the contour grid (x fastest) at (x, y).
double grid_value(const Matrix& grid, double x, double y) {
    const double fx = (x - kGridX0) / (kGridX1 - kGridX0) * static_cast<double>(kGridRes - 1);
    const double fy = (y - kGridY0) / (kGridY1 - kGridY0) * static_cast<double>(kGridRes - 1);
    const auto ix = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(fx)), 0, kGridRes - 2);
    const auto iy = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(fy)), 0, kGridRes - 2);
    const double tx = std::clamp(fx - static_cast<double>(ix), 0.0, 1.0), ty = std::clamp(fy - static_cast<double>(iy), 0.0, 1.0);
    auto at = [&](Eigen::Index i, Eigen::Index j) { return grid(j * kGridRes + i, 2); };
    return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) + (1 - tx) * ty * at(ix, iy + 1) +
           tx * ty * at(ix + 1, iy + 1);
}

Verdict s_shape(const Run& r) {
    const Checkpoint& ck = r.final;
    const Matrix Y = generate_from(ck, fixed_noise(ck, kGenSamples));
    const Matrix Ym = ck.scale_applied ? ck.scale_applied->apply(Y) : Y;
    const Vector gv = decision_values(ck.ball, ck.feature_map, Ym);
    const double gen_ok = static_cast<double>((gv.array() >= kSGenTol).count()) / static_cast<double>(gv.size());

    const Matrix grid = cli::contour_grid(ck, {kGridX0, kGridX1, kGridY0, kGridY1, kGridRes});
    Rng rng(kEvalSeed + 2);
    const Dataset truth = sample_s_shape(kGenSamples, r.rc.dataset.noise_std, rng);
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) pos += grid_value(grid, truth.points(i, 0), truth.points(i, 1)) > 0.0;
    std::uniform_real_distribution<double> ux(kGridX0, kGridX1), uy(kGridY0, kGridY1);
    int probes = 0, neg = 0;
    while (probes < kProbes) {
        const double x = ux(rng), y = uy(rng);
        if (s_shape_distance(x, y) < kProbeDistance) continue;
        ++probes;
        neg += grid_value(grid, x, y) < 0.0;
    }
    const double truth_pos = static_cast<double>(pos) / static_cast<double>(truth.size());
    const double probe_neg = static_cast<double>(neg) / kProbes;
    return {gen_ok >= kSGenFraction && truth_pos >= kTruthPositive && probe_neg >= kProbeNegative,
            fmt("generated with decision >= %.2f: %.3f (>= %.2f); %ldx%ld grid on [%.0f,%.0f]x[%.1f,%.1f]: truth positive "
                "%.3f (>= %.2f), %d probes >= %.1f off-curve negative %.3f (>= %.2f); training %.1f s",
                kSGenTol, gen_ok, kSGenFraction, static_cast<long>(kGridRes), static_cast<long>(kGridRes), kGridX0,
                kGridX1, kGridY0, kGridY1, truth_pos, kTruthPositive, kProbes, kProbeDistance, probe_neg,
                kProbeNegative, r.seconds)};
}

// ---------------------------------------------------------------- 9

Verdict mnist(const Run& r) {
    const Matrix Z = fixed_noise(r.final, kHingeNoise);
    const double h0 = generator_hinge(r.untrained.feature_map, r.untrained.ball, r.untrained.generator, Z);
    const double h1 = generator_hinge(r.final.feature_map, r.final.ball, r.final.generator, Z);
    const Matrix Y = generate_from(r.final, Z);
    const bool open_unit = Y.minCoeff() > 0.0 && Y.maxCoeff() < 1.0;
    const auto& c = r.rc.train;
    bool arch = c.num_features == 5000 && c.generator.hidden.size() == 4;
    for (auto h : c.generator.hidden) arch = arch && h == 200;
    return {arch && r.data.size() == 1000 && h0 > 0.0 && h1 <= kHingeDrop * h0 && open_unit && r.seconds < kMnistSeconds,
            fmt("%ld images, D = %ld, hidden 4x200: %s; hinge %.4f -> %.4f (drop %.1f%%, >= %.0f%%); outputs in "
                "[%.3g, %.3g] (open unit interval: %s); %.1f s (< %.0f s)",
                static_cast<long>(r.data.size()), static_cast<long>(c.num_features), arch ? "yes" : "no", h0, h1,
                h0 > 0 ? 100.0 * (1.0 - h1 / h0) : 0.0, 100.0 * kHingeDrop, Y.minCoeff(), Y.maxCoeff(),
                open_unit ? "yes" : "no", r.seconds, kMnistSeconds)};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / ("gen_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [&](const std::string& sub) {
        const std::string cmd = std::string(cli::kOutputDirEnv) + "=" + (dir / sub).string() + " " + GEN_BINARY +
                                " train " + config_path("synthetic1d.cfg").string() + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    const int ra = run("a"), rb = run("b");
    const std::string a = slurp(dir / "a" / cli::kCheckpointFile), b = slurp(dir / "b" / cli::kCheckpointFile);
    const bool same = ra == 0 && rb == 0 && !a.empty() && a == b;
    bool round_trip = false;
    if (!a.empty()) {
        const Checkpoint ck = load_checkpoint(dir / "a" / cli::kCheckpointFile);
        save_checkpoint(dir / "copy.bin", ck);
        round_trip = serialize(ck) == a && slurp(dir / "copy.bin") == a;
    }
    fs::remove_all(dir);
    return {same && round_trip, fmt("two `gen train` runs exit %d/%d, %zu checkpoint bytes, identical: %s; "
                                    "load/save round trip identical: %s",
                                    ra, rb, a.size(), same ? "yes" : "no", round_trip ? "yes" : "no")};
}

// ---------------------------------------------------------------- 11

Verdict bijection() {
    RowMatrix two(2, 1);
    two << 1.0, 2.0;
    RowMatrix collinear(3, 2);
    collinear << 1.0, 2.0, -0.5, -1.0, 3.0, 6.0;
    const auto a = check_bijection_conditions(FeatureMap(two, Vector::Zero(1)), 1.0);
    const auto b = check_bijection_conditions(FeatureMap(two, Vector::Zero(1)), 4.0);
    const auto c = check_bijection_conditions(FeatureMap(collinear, Vector::Zero(2)), 0.1);
    const bool cases = a.rank_ok && a.contraction_ok && b.rank_ok && !b.contraction_ok && !c.rank_ok && c.rank == 1;

    Rng rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> pick_d(1, 6), pick_D(1, 40), pick_n(2, 60);
    int with_rank = 0, contraction = 0;
    for (int t = 0; t < kBijectionCases; ++t) {
        const Eigen::Index d = pick_d(rng), D = pick_D(rng);
        Vector ls(d);
        for (Eigen::Index j = 0; j < d; ++j) ls(j) = 1.5 * g(rng);
        const auto fm = build_feature_map(d, D, 300 + static_cast<std::uint64_t>(t), ls);
        Dataset ds;
        ds.points.resize(pick_n(rng), d);
        const double spread = std::exp(2.0 * g(rng));
        for (Eigen::Index i = 0; i < ds.points.size(); ++i) ds.points.data()[i] = spread * g(rng);
        const Dataset scaled = rescale_to_bijective(ds, fm);
        const auto rep = check_bijection_conditions(fm, diameter_estimate(scaled).value);
        if (!rep.rank_ok) continue;
        ++with_rank;
        contraction += rep.contraction_ok;
    }
    return {cases && with_rank > 0 && contraction == with_rank,
            fmt("constructed cases (true,true) (true,false) (rank 1, false): %s; rescaled data contraction_ok in %d of "
                "%d full-rank random cases (of %d)",
                cases ? "exact" : "WRONG", contraction, with_rank, kBijectionCases)};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int n, const std::function<Verdict()>& body) {
        Verdict v;
        try {
            v = body();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s criterion %d: %s\n", v.pass ? "PASS" : "FAIL", n, v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    };

    report(1, unit_norm);
    report(2, kernel_sweep);
    report(3, gradients);
    report(4, ball_fit);

    std::optional<Run> one_d;
    try {
        one_d = train_config("synthetic1d.cfg");
    } catch (const std::exception& e) {
        std::printf("synthetic1d training failed: %s\n", e.what());
    }
    report(5, [&] { return one_d ? coverage_1d(*one_d) : Verdict{false, "no trained model"}; });
    report(6, [&] { return one_d ? distances_1d(*one_d) : Verdict{false, "no trained model"}; });
    report(7, [] { return coverage_2d(train_config("synthetic2d.cfg")); });
    report(8, [] { return s_shape(train_config("s_shape.cfg")); });
    report(9, [] { return mnist(train_config("mnist1k.cfg")); });
    report(10, determinism);
    report(11, bijection);

    std::printf("%d of 11 criteria passed\n", 11 - failed);
    return failed;
}
