#pragma once

// Command implementations behind the `gen` executable. Each returns the
// process exit code and writes diagnostics to `err`:
//   0 ok, 1 unexpected failure, 2 config/argument error, 3 data error,
//   4 numerical abort, 5 checkpoint unreadable or wrong version.

#include "gen/checkpoint.hpp"
#include "gen/config_json.hpp"
#include "gen/metrics.hpp"
#include "gen/trainer.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gen::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutputDirEnv = "GEN_OUTPUT_DIR";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kLogFile = "train_log.jsonl";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr Eigen::Index kEvalSamples = 10000;

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, data_error = 3, numerical_error = 4, checkpoint_error = 5 };

/// Runs `body`, translating library exceptions into exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return numerical_error;
    } catch (const CheckpointError& e) {
        err << "checkpoint error: " << e.what() << '\n';
        return checkpoint_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return failure;
    }
}

inline fs::path output_dir(const RunConfig& rc) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return fs::path(env);
    return fs::path(rc.output_dir);
}

/// Makes dataset paths absolute so the echo stored in the checkpoint is self-contained.
inline void absolutize_paths(RunConfig& rc) {
    auto fix = [&](std::string& p) {
        if (p.empty()) return;
        p = fs::weakly_canonical(resolve(rc, p)).string();
    };
    fix(rc.dataset.images);
    fix(rc.dataset.labels);
    fix(rc.dataset.path);
}

inline std::string log_line(const EpochRecord& r) {
    json j{{"epoch", r.epoch}, {"phase", r.phase}, {"objective", r.objective}, {"hinge_mean", r.hinge_mean}};
    if (r.phase == 2) {
        j["fm_gap"] = r.fm_gap;
    } else {
        j["fm_gap"] = nullptr;
        j["violator_fraction"] = r.violator_fraction;
    }
    j["wall_ms"] = r.wall_ms;
    return j.dump();
}

struct EvalResult {
    double symmetric_kl = std::numeric_limits<double>::quiet_NaN();
    double wasserstein = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> coverage;
};

/// Distance metrics (1-D only) and mode coverage between generated and truth samples.
inline EvalResult evaluate_samples(const Matrix& generated, const Matrix& truth, const std::optional<MixtureSpec>& mixture,
                                   double radius, Rng& rng) {
    EvalResult r;
    if (generated.cols() == 1 && truth.cols() == 1) {
        std::vector<double> g(generated.data(), generated.data() + generated.rows());
        std::vector<double> t(truth.data(), truth.data() + truth.rows());
        std::vector<double> edges;
        if (mixture) {
            edges = default_edges(*mixture);
        } else {
            const double lo = std::min(generated.minCoeff(), truth.minCoeff());
            const double hi = std::max(generated.maxCoeff(), truth.maxCoeff());
            edges = equal_width_edges(lo, hi > lo ? hi : lo + 1.0, 100);
        }
        r.symmetric_kl = symmetric_kl(build_histogram(g, edges, kDefaultLaplaceAlpha),
                                      build_histogram(t, edges, kDefaultLaplaceAlpha));
        r.wasserstein = wasserstein_1d(g, t, rng);
    }
    if (mixture) r.coverage = mode_coverage(generated, modes_of(*mixture, radius));
    return r;
}

inline double default_mode_radius(Eigen::Index d) { return d == 1 ? 0.15 : 0.3; }

// ---------------------------------------------------------------- train

inline int cmd_train(const fs::path& config_path, bool resume, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunConfig rc = load_run_config(config_path);
        absolutize_paths(rc);
        const Dataset data = load_dataset(rc);
        const fs::path dir = output_dir(rc);
        fs::create_directories(dir);
        const fs::path ckpt_path = dir / kCheckpointFile;

        std::optional<Checkpoint> previous;
        if (resume && fs::exists(ckpt_path)) {
            previous = load_checkpoint(ckpt_path);
            if (previous->config_json != config_echo(rc))
                throw ConfigError("cannot resume: checkpoint was written by a different configuration");
        }

        std::ofstream log(dir / kLogFile, previous ? std::ios::app : std::ios::trunc);
        if (!log) throw DataError("cannot write training log in '" + dir.string() + "'");

        // Per-epoch evaluation against the true mixture (1-D only), fixed eval samples.
        const auto mixture = mixture_of(rc.dataset);
        std::optional<std::ofstream> metrics;
        Matrix truth, eval_noise;
        if (mixture && data.dims() == 1) {
            metrics.emplace(dir / kMetricsFile, previous ? std::ios::app : std::ios::trunc);
            if (!previous) *metrics << "epoch,symmetric_kl,wasserstein\n";
            Rng truth_rng(derive_seed(rc.train.seed, SeedStream::evaluation));
            truth = sample_mixture(*mixture, kEvalSamples, truth_rng).points;
            eval_noise = sample_noise(rc.train.noise, kEvalSamples, truth_rng);
        }

        TrainHooks hooks;
        hooks.on_epoch = [&](const EpochRecord& rec, const Checkpoint& ck) {
            log << log_line(rec) << '\n' << std::flush;
            if (metrics && rec.phase == 2) {
                Matrix gen = ck.generator(eval_noise);
                if (ck.scale_applied) gen = ck.scale_applied->invert(gen);
                Rng r(derive_seed(rc.train.seed, SeedStream::evaluation) + static_cast<std::uint64_t>(rec.epoch));
                const auto ev = evaluate_samples(gen, truth, mixture, default_mode_radius(1), r);
                *metrics << rec.epoch << ',' << format_double(ev.symmetric_kl) << ',' << format_double(ev.wasserstein)
                         << '\n'
                         << std::flush;
            }
            save_checkpoint(ckpt_path, ck);
        };
        const Checkpoint ck = train(data, rc.train, hooks, config_echo(rc), previous ? &*previous : nullptr);
        save_checkpoint(ckpt_path, ck);
        out << "wrote " << ckpt_path.string() << " after " << ck.epochs_completed << " epochs\n";
        return int(ok);
    });
}

// ---------------------------------------------------------------- generate

inline int cmd_generate(const fs::path& ckpt_path, Eigen::Index n, const fs::path& out_csv, std::uint64_t seed,
                        std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (n < 1) throw ConfigError("--n must be >= 1");
        const Checkpoint ck = load_checkpoint(ckpt_path);
        Rng rng(seed);
        const Matrix Y = generate(ck, n, rng);
        write_csv(out_csv, Y);
        out << "wrote " << n << " samples to " << out_csv.string() << '\n';
        return int(ok);
    });
}

// ---------------------------------------------------------------- eval

/// Truth spec: a dataset description (same keys as the config's "dataset"),
/// or {"kind": "checkpoint", "path": ...} to compare against another generator.
/// An optional "radius" sets the mode-coverage window.
inline int cmd_eval(const fs::path& ckpt_path, const fs::path& truth_path, const fs::path& out_csv, std::uint64_t seed,
                    std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (truth_path.empty()) throw ConfigError("--truth is required");
        std::ifstream tin(truth_path);
        if (!tin) throw ConfigError("cannot open truth spec '" + truth_path.string() + "'");
        json tj;
        try {
            tj = json::parse(tin);
        } catch (const json::parse_error& e) {
            throw ConfigError("truth spec is not valid JSON: " + std::string(e.what()));
        }
        if (!tj.is_object()) throw ConfigError("truth spec must be a JSON object");
        const Checkpoint ck = load_checkpoint(ckpt_path);
        const Eigen::Index d = ck.generator.out_dim();
        double radius = default_mode_radius(d);
        if (tj.contains("radius")) {
            radius = tj.at("radius").get<double>();
            tj.erase("radius");
        }

        Rng rng(seed);
        const Matrix generated = generate(ck, kEvalSamples, rng);
        Matrix truth;
        std::optional<MixtureSpec> mixture;
        if (tj.value("kind", "") == "checkpoint") {
            const auto p = tj.value("path", "");
            fs::path tp(p);
            if (tp.is_relative()) tp = truth_path.parent_path() / tp;
            const Checkpoint other = load_checkpoint(tp);
            Rng trng(mix_seed(seed, 1));
            truth = generate(other, kEvalSamples, trng);
        } else {
            DatasetSpec spec = parse_dataset_spec(tj);
            spec.n = kEvalSamples;
            spec.seed = mix_seed(seed, 1);
            mixture = mixture_of(spec);
            truth = load_dataset(spec, seed, truth_path.parent_path()).points;
        }
        if (truth.cols() != d) throw ConfigError("truth data dimension differs from the checkpoint's");
        Rng wrng(mix_seed(seed, 2));
        const auto ev = evaluate_samples(generated, truth, mixture, radius, wrng);

        std::ofstream csv(out_csv);
        if (!csv) throw DataError("cannot write '" + out_csv.string() + "'");
        csv << "samples,symmetric_kl,wasserstein";
        for (std::size_t k = 0; k < ev.coverage.size(); ++k) csv << ",coverage_" << k;
        csv << '\n' << kEvalSamples << ',' << format_double(ev.symmetric_kl) << ',' << format_double(ev.wasserstein);
        for (double c : ev.coverage) csv << ',' << format_double(c);
        csv << '\n';
        out << "symmetric_kl=" << ev.symmetric_kl << " wasserstein=" << ev.wasserstein << '\n';
        return int(ok);
    });
}

// ---------------------------------------------------------------- contour

struct GridSpec {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    Eigen::Index res = 0;
};

inline GridSpec parse_grid(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            v.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError("bad grid value '" + cell + "'");
        }
    }
    if (v.size() != 5) throw ConfigError("--grid expects x0,x1,y0,y1,res");
    GridSpec g{v[0], v[1], v[2], v[3], static_cast<Eigen::Index>(v[4])};
    if (g.res < 2 || static_cast<double>(g.res) != v[4]) throw ConfigError("grid resolution must be an integer >= 2");
    if (!(g.x1 > g.x0) || !(g.y1 > g.y0)) throw ConfigError("grid bounds must be increasing");
    return g;
}

/// res x res points, x varying fastest; decision values in the training coordinates of the ball.
inline Matrix contour_grid(const Checkpoint& ck, const GridSpec& g) {
    if (ck.feature_map.dims_in() != 2)
        throw ConfigError("contour needs a 2-D checkpoint (this one has d = " + std::to_string(ck.feature_map.dims_in()) + ")");
    Matrix pts(g.res * g.res, 2);
    for (Eigen::Index iy = 0; iy < g.res; ++iy)
        for (Eigen::Index ix = 0; ix < g.res; ++ix) {
            const Eigen::Index r = iy * g.res + ix;
            pts(r, 0) = g.x0 + (g.x1 - g.x0) * static_cast<double>(ix) / static_cast<double>(g.res - 1);
            pts(r, 1) = g.y0 + (g.y1 - g.y0) * static_cast<double>(iy) / static_cast<double>(g.res - 1);
        }
    const Matrix model_pts = ck.scale_applied ? ck.scale_applied->apply(pts) : pts;
    Matrix out(pts.rows(), 3);
    out.leftCols(2) = pts;
    out.col(2) = decision_values(ck.ball, ck.feature_map, model_pts);
    return out;
}

inline int cmd_contour(const fs::path& ckpt_path, const std::string& grid, const fs::path& out_csv, std::ostream& out,
                       std::ostream& err) {
    return guarded(err, [&] {
        const GridSpec g = parse_grid(grid);
        const Checkpoint ck = load_checkpoint(ckpt_path);
        write_csv(out_csv, contour_grid(ck, g), {"x", "y", "value"});
        out << "wrote " << g.res * g.res << " grid values to " << out_csv.string() << '\n';
        return int(ok);
    });
}

// ---------------------------------------------------------------- check

struct CheckReport {
    BijectionReport bijection;
    double diameter = 0.0;
    DiameterMethod diameter_method = DiameterMethod::exact_pairwise;
    double max_unit_norm_error = 0.0;
    Eigen::Index points_checked = 0;
};

inline CheckReport check_report(const FeatureMap& fm, const Dataset& data) {
    CheckReport r;
    const auto diam = diameter_estimate(data);
    r.diameter = diam.value;
    r.diameter_method = diam.method;
    r.bijection = check_bijection_conditions(fm, diam.value);
    const Eigen::Index m = std::min<Eigen::Index>(data.size(), 1000);
    const Matrix Phi = fm.map_batch(data.points.topRows(m));
    r.max_unit_norm_error = (Phi.rowwise().squaredNorm().array() - 1.0).abs().maxCoeff();
    r.points_checked = m;
    return r;
}

inline json to_json(const CheckReport& r) {
    return json{{"rank_ok", r.bijection.rank_ok},
                {"rank", r.bijection.rank},
                {"contraction_ok", r.bijection.contraction_ok},
                {"product_value", r.bijection.product_value},
                {"two_pi", kTwoPi},
                {"diameter", r.diameter},
                {"diameter_method", r.diameter_method == DiameterMethod::exact_pairwise ? "exact_pairwise" : "range_norm_bound"},
                {"unit_norm_max_error", r.max_unit_norm_error},
                {"unit_norm_points", r.points_checked}};
}

inline bool is_checkpoint_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    char magic[sizeof kCheckpointMagic] = {};
    in.read(magic, sizeof magic);
    return in && std::equal(std::begin(magic), std::end(magic), std::begin(kCheckpointMagic));
}

/// Bijectivity report for a checkpoint (its learned kernel, its training data)
/// or for a config (initial kernel, data after the configured preprocessing).
inline int cmd_check(const fs::path& path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!fs::exists(path)) throw ConfigError("no such file '" + path.string() + "'");
        CheckReport rep;
        if (is_checkpoint_file(path)) {
            const Checkpoint ck = load_checkpoint(path);
            const RunConfig rc = parse_config_echo(ck.config_json);
            Dataset data = load_dataset(rc);
            if (ck.scale_applied) {
                data.points = ck.scale_applied->apply(data.points);
                data.scale_applied = ck.scale_applied;
            }
            rep = check_report(ck.feature_map, data);
        } else {
            RunConfig rc = load_run_config(path);
            const Dataset raw = load_dataset(rc);
            const FeatureMap fm = build_feature_map(raw.dims(), rc.train.num_features,
                                                    derive_seed(rc.train.seed, SeedStream::feature_map),
                                                    Vector::Constant(raw.dims(), rc.train.initial_log_scale));
            rep = check_report(fm, prepare_training_data(raw, fm, rc.train));
        }
        out << to_json(rep).dump(2) << '\n';
        return int(ok);
    });
}

}  // namespace gen::cli
