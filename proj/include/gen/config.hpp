#pragma once

#include "gen/common.hpp"
#include "gen/generator.hpp"

#include <vector>

namespace gen {

/// Generator hidden stack; the output layer width is the data dimension.
struct GeneratorArch {
    std::vector<Eigen::Index> hidden{30, 30};
    Activation hidden_activation = Activation::softplus;
    Activation output_activation = Activation::identity;

    std::vector<LayerSpec> layers(Eigen::Index out_dim) const {
        std::vector<LayerSpec> specs;
        for (auto w : hidden) specs.push_back({w, hidden_activation});
        specs.push_back({out_dim, output_activation});
        return specs;
    }
};

struct TrainConfig {
    double lambda = 1.0;
    Eigen::Index num_features = 100;
    int total_epochs = 20;
    int phase1_epochs = 10;  // epochs 1..phase1_epochs fit the ball, the rest train G
    Eigen::Index batch_size = 64;
    double lr_ball = 1e-3;
    double lr_gen = 1e-4;
    double fm_weight = 1.0;
    std::uint64_t seed = 0;
    NoiseSpec noise{};
    GeneratorArch generator{};
    double initial_log_scale = 0.0;  // same value on every input dimension
    bool rescale_to_bijective = false;
};

/// Phase-1 length when only T is given: ceil(T / 2).
inline int default_phase1_epochs(int total_epochs) { return (total_epochs + 1) / 2; }

inline void validate(const TrainConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
    if (!(c.lambda > 0.0)) fail("lambda must be > 0");
    if (c.num_features < 1) fail("num_features must be >= 1");
    if (c.phase1_epochs < 1 || c.phase1_epochs >= c.total_epochs)
        fail("need 1 <= phase1_epochs < total_epochs (got " + std::to_string(c.phase1_epochs) + " and " +
             std::to_string(c.total_epochs) + ")");
    if (c.batch_size < 1) fail("batch_size must be >= 1");
    if (!(c.lr_ball > 0.0) || !(c.lr_gen > 0.0)) fail("learning rates must be > 0");
    if (!(c.fm_weight >= 0.0)) fail("fm_weight must be >= 0");
    if (c.noise.dim < 1) fail("noise dimension must be >= 1");
    for (auto w : c.generator.hidden)
        if (w < 1) fail("hidden layer widths must be >= 1");
    if (!std::isfinite(c.initial_log_scale)) fail("initial_log_scale must be finite");
}

}  // namespace gen
