#pragma once

// JSON run configuration: TrainConfig fields, a dataset description and an
// output directory. Every field is echoed (defaults included) into the
// checkpoint so a run can be reproduced from the checkpoint alone.

#include "gen/config.hpp"
#include "gen/data.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace gen {

using json = nlohmann::json;

/// Where training data comes from.
struct DatasetSpec {
    std::string kind = "mixture1d";  // mixture1d | mixture2d | s_shape | gaussian | mnist | csv
    Eigen::Index n = 10000;
    std::optional<std::uint64_t> seed;  // defaults to a stream derived from the run seed
    bool variance_is_std = false;       // mixture1d: read N(m, v) as N(m, v^2)
    double variance = 0.01;             // mixture2d: per-dimension component variance
    double noise_std = 0.05;            // s_shape
    Eigen::Index dims = 2;              // gaussian: N(0, I_dims)
    std::string images, labels;         // mnist
    Eigen::Index subset = 1000;         // mnist
    std::string path;                   // csv
};

struct RunConfig {
    TrainConfig train;
    DatasetSpec dataset;
    std::string output_dir = "out";
    std::filesystem::path base_dir;  // relative paths resolve against the config file's directory
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, _] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline DatasetSpec parse_dataset_spec(const json& j) {
    detail::check_keys(j, {"kind", "n", "seed", "variance_is_std", "variance", "noise_std", "dims", "images", "labels",
                           "subset", "path"},
                       "dataset");
    DatasetSpec s;
    s.kind = detail::get_or<std::string>(j, "kind", s.kind);
    s.n = detail::get_or<Eigen::Index>(j, "n", s.n);
    if (j.contains("seed") && !j.at("seed").is_null()) s.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    s.variance_is_std = detail::get_or<bool>(j, "variance_is_std", s.variance_is_std);
    s.variance = detail::get_or<double>(j, "variance", s.variance);
    s.noise_std = detail::get_or<double>(j, "noise_std", s.noise_std);
    s.dims = detail::get_or<Eigen::Index>(j, "dims", s.dims);
    s.images = detail::get_or<std::string>(j, "images", s.images);
    s.labels = detail::get_or<std::string>(j, "labels", s.labels);
    s.subset = detail::get_or<Eigen::Index>(j, "subset", s.subset);
    s.path = detail::get_or<std::string>(j, "path", s.path);
    static const std::set<std::string> kinds{"mixture1d", "mixture2d", "s_shape", "gaussian", "mnist", "csv"};
    if (!kinds.count(s.kind)) throw ConfigError("unknown dataset kind '" + s.kind + "'");
    if (s.n < 1) throw ConfigError("dataset n must be >= 1");
    return s;
}

inline json to_json(const DatasetSpec& s) {
    json j{{"kind", s.kind}};
    if (s.seed) j["seed"] = *s.seed;
    if (s.kind == "mixture1d") {
        j["n"] = s.n;
        j["variance_is_std"] = s.variance_is_std;
    } else if (s.kind == "mixture2d") {
        j["n"] = s.n;
        j["variance"] = s.variance;
    } else if (s.kind == "s_shape") {
        j["n"] = s.n;
        j["noise_std"] = s.noise_std;
    } else if (s.kind == "gaussian") {
        j["n"] = s.n;
        j["dims"] = s.dims;
    } else if (s.kind == "mnist") {
        j["images"] = s.images;
        j["labels"] = s.labels;
        j["subset"] = s.subset;
    } else if (s.kind == "csv") {
        j["path"] = s.path;
    }
    return j;
}

inline TrainConfig parse_train_config(const json& j) {
    using detail::get_or;
    TrainConfig c;
    c.lambda = get_or<double>(j, "lambda", c.lambda);
    c.num_features = get_or<Eigen::Index>(j, "num_features", c.num_features);
    c.total_epochs = get_or<int>(j, "total_epochs", c.total_epochs);
    c.phase1_epochs = j.contains("phase1_epochs") ? get_or<int>(j, "phase1_epochs", 1)
                                                  : default_phase1_epochs(c.total_epochs);
    c.batch_size = get_or<Eigen::Index>(j, "batch_size", c.batch_size);
    c.lr_ball = get_or<double>(j, "lr_ball", c.lr_ball);
    c.lr_gen = get_or<double>(j, "lr_gen", c.lr_gen);
    c.fm_weight = get_or<double>(j, "fm_weight", c.fm_weight);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.initial_log_scale = get_or<double>(j, "initial_log_scale", c.initial_log_scale);
    c.rescale_to_bijective = get_or<bool>(j, "rescale_to_bijective", c.rescale_to_bijective);
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        detail::check_keys(n, {"kind", "dim"}, "noise");
        const auto kind = get_or<std::string>(n, "kind", "uniform");
        const auto k = parse_noise_kind(kind);
        if (!k) throw ConfigError("unknown noise kind '" + kind + "'");
        c.noise.kind = *k;
        c.noise.dim = get_or<Eigen::Index>(n, "dim", c.noise.dim);
    }
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        detail::check_keys(g, {"hidden", "hidden_activation", "output_activation"}, "generator");
        c.generator.hidden = get_or<std::vector<Eigen::Index>>(g, "hidden", c.generator.hidden);
        for (auto [key, slot] : {std::pair{"hidden_activation", &c.generator.hidden_activation},
                                 std::pair{"output_activation", &c.generator.output_activation}}) {
            if (!g.contains(key)) continue;
            const auto name = get_or<std::string>(g, key, "");
            const auto a = parse_activation(name);
            if (!a) throw ConfigError("unknown activation '" + name + "'");
            *slot = *a;
        }
    }
    validate(c);
    return c;
}

inline json to_json(const TrainConfig& c) {
    json hidden = json::array();
    for (auto h : c.generator.hidden) hidden.push_back(h);
    return json{{"lambda", c.lambda},
                {"num_features", c.num_features},
                {"total_epochs", c.total_epochs},
                {"phase1_epochs", c.phase1_epochs},
                {"batch_size", c.batch_size},
                {"lr_ball", c.lr_ball},
                {"lr_gen", c.lr_gen},
                {"fm_weight", c.fm_weight},
                {"seed", c.seed},
                {"initial_log_scale", c.initial_log_scale},
                {"rescale_to_bijective", c.rescale_to_bijective},
                {"noise", {{"kind", std::string(to_string(c.noise.kind))}, {"dim", c.noise.dim}}},
                {"generator",
                 {{"hidden", hidden},
                  {"hidden_activation", std::string(to_string(c.generator.hidden_activation))},
                  {"output_activation", std::string(to_string(c.generator.output_activation))}}}};
}

inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {}) {
    detail::check_keys(j, {"lambda", "num_features", "total_epochs", "phase1_epochs", "batch_size", "lr_ball", "lr_gen",
                           "fm_weight", "seed", "initial_log_scale", "rescale_to_bijective", "noise", "generator",
                           "dataset", "output_dir"},
                       "config");
    RunConfig rc;
    rc.train = parse_train_config(j);
    if (!j.contains("dataset")) throw ConfigError("config has no 'dataset' section");
    rc.dataset = parse_dataset_spec(j.at("dataset"));
    rc.output_dir = detail::get_or<std::string>(j, "output_dir", rc.output_dir);
    rc.base_dir = base_dir;
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

/// Canonical echo stored in checkpoints: every training field plus the dataset, no output location.
inline std::string config_echo(const RunConfig& rc) {
    json j = to_json(rc.train);
    j["dataset"] = to_json(rc.dataset);
    return j.dump(2);
}

/// Re-reads an echo produced by config_echo (paths in it are kept as written).
inline RunConfig parse_config_echo(const std::string& echo, const std::filesystem::path& base_dir = {}) {
    try {
        return parse_run_config(json::parse(echo), base_dir);
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("checkpoint config echo is not valid JSON: ") + e.what());
    }
}

inline std::filesystem::path resolve(const RunConfig& rc, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !rc.base_dir.empty()) path = rc.base_dir / path;
    return path;
}

inline Dataset load_dataset(const DatasetSpec& s, std::uint64_t run_seed, const std::filesystem::path& base_dir = {}) {
    Rng rng(s.seed ? *s.seed : derive_seed(run_seed, SeedStream::dataset));
    auto resolve_path = [&](const std::string& p) {
        std::filesystem::path path(p);
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        return path;
    };
    if (s.kind == "mixture1d") {
        auto ds = sample_mixture(mixture_1d(s.variance_is_std), s.n, rng);
        ds.name = "mixture1d";
        return ds;
    }
    if (s.kind == "mixture2d") {
        auto ds = sample_mixture(mixture_2d(s.variance), s.n, rng);
        ds.name = "mixture2d";
        return ds;
    }
    if (s.kind == "s_shape") return sample_s_shape(s.n, s.noise_std, rng);
    if (s.kind == "gaussian") {
        if (s.dims < 1) throw ConfigError("gaussian dataset needs dims >= 1");
        std::normal_distribution<double> normal(0.0, 1.0);
        Dataset ds;
        ds.name = "gaussian";
        ds.points.resize(s.n, s.dims);
        for (Eigen::Index i = 0; i < s.n; ++i)
            for (Eigen::Index j = 0; j < s.dims; ++j) ds.points(i, j) = normal(rng);
        return ds;
    }
    if (s.kind == "mnist") {
        const auto img = resolve_path(s.images), lab = resolve_path(s.labels);
        for (const auto& p : {img, lab})
            if (!std::filesystem::exists(p)) throw DataError("dataset file not found: " + p.string());
        return load_mnist_idx(img, lab, s.subset);
    }
    if (s.kind == "csv") {
        const auto p = resolve_path(s.path);
        if (!std::filesystem::exists(p)) throw DataError("dataset file not found: " + p.string());
        return read_csv(p);
    }
    throw ConfigError("unknown dataset kind '" + s.kind + "'");
}

inline Dataset load_dataset(const RunConfig& rc) { return load_dataset(rc.dataset, rc.train.seed, rc.base_dir); }

/// Mixture behind a synthetic dataset spec, when there is one.
inline std::optional<MixtureSpec> mixture_of(const DatasetSpec& s) {
    if (s.kind == "mixture1d") return mixture_1d(s.variance_is_std);
    if (s.kind == "mixture2d") return mixture_2d(s.variance);
    return std::nullopt;
}

}  // namespace gen
