#pragma once

// Two-phase training. Epochs 1..L fit the enclosing ball and the kernel
// scale; epochs L+1..T freeze (r, c, log_scale) and train the generator on
//   J = mean_z max(0, ||phi(G(z)) - c||^2 - r) + fm_weight * ||mean phi(x) - mean phi(G(z))||^2.

#include "gen/adam.hpp"
#include "gen/ball.hpp"
#include "gen/checkpoint.hpp"
#include "gen/config.hpp"
#include "gen/data.hpp"
#include "gen/generator.hpp"
#include "gen/rff.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>

namespace gen {

struct GeneratorLoss {
    double loss = 0.0;
    double hinge = 0.0;    // mean violation over the z batch
    double fm_term = 0.0;  // ||mean phi(x) - mean phi(G(z))||^2, unweighted
    GeneratorGrads grads;
};

/// Loss and parameter gradients given the data-side feature mean for the batch.
inline GeneratorLoss generator_loss_from_mean(const FeatureMap& fm, const Ball& b, const Generator& g, const Matrix& Z,
                                              const Vector& data_feature_mean, double fm_weight) {
    const Eigen::Index n = Z.rows();
    if (n < 1) throw ShapeError("generator_loss: empty noise batch");
    const Tape tape = g.forward(Z);
    const Matrix Phi = fm.map_batch(tape.output);
    const Vector dist = squared_distances(b, Phi);
    const double inv_n = 1.0 / static_cast<double>(n);

    GeneratorLoss out;
    Matrix d_phi = Matrix::Zero(n, Phi.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = dist(i) - b.radius_sq;
        if (v > 0.0) {
            out.hinge += v;
            d_phi.row(i) = (2.0 * inv_n) * (Phi.row(i) - b.center.transpose());
        }
    }
    out.hinge *= inv_n;
    const Vector gap = Phi.colwise().mean().transpose() - data_feature_mean;
    out.fm_term = gap.squaredNorm();
    out.loss = out.hinge + fm_weight * out.fm_term;
    if (fm_weight != 0.0) d_phi.rowwise() += (2.0 * fm_weight * inv_n) * gap.transpose();
    out.grads = g.backward(tape, fm.input_vjp(tape.output, d_phi));
    return out;
}

inline GeneratorLoss generator_loss(const FeatureMap& fm, const Ball& b, const Generator& g, const Matrix& Z,
                                    const Matrix& X, double fm_weight) {
    if (X.rows() < 1) throw ShapeError("generator_loss: empty data batch");
    return generator_loss_from_mean(fm, b, g, Z, fm.map_batch(X).colwise().mean().transpose(), fm_weight);
}

/// Mean hinge violation of G over a fixed noise batch (no gradients).
inline double generator_hinge(const FeatureMap& fm, const Ball& b, const Generator& g, const Matrix& Z) {
    return hinge_violations(b, fm.map_batch(g(Z))).mean();
}

/// ||mean phi(X) - mean phi(G(Z))||.
inline double feature_mean_gap(const FeatureMap& fm, const Generator& g, const Matrix& X, const Matrix& Z) {
    return (fm.map_batch(X).colwise().mean() - fm.map_batch(g(Z)).colwise().mean()).norm();
}

struct EpochRecord {
    int epoch = 0;
    int phase = 1;
    double objective = 0.0;   // phase 1: full-data J_d; phase 2: mean batch J_g
    double hinge_mean = 0.0;
    double fm_gap = 0.0;      // phase 2 only: mean feature-matching term
    double violator_fraction = 0.0;  // phase 1 only
    double wall_ms = 0.0;
};

struct TrainHooks {
    /// Called after every epoch with the record and a checkpoint of the state at that boundary.
    std::function<void(const EpochRecord&, const Checkpoint&)> on_epoch;
    /// Skip building per-epoch checkpoints when nobody needs them.
    bool want_checkpoints = true;
};

namespace detail {

inline Checkpoint snapshot(const TrainConfig& cfg, const std::string& config_json, int epoch, const FeatureMap& fm,
                           const Ball& ball, const Generator& g, const Rng& shuffle, const Rng& noise,
                           const std::optional<ScaleRecord>& scale, const AdamState& ball_opt, const AdamState& gen_opt) {
    Checkpoint ck;
    ck.config_json = config_json;
    ck.config = cfg;
    ck.epochs_completed = epoch;
    ck.feature_map = fm;
    ck.ball = ball;
    ck.generator = g;
    ck.shuffle_rng_state = rng_state(shuffle);
    ck.noise_rng_state = rng_state(noise);
    ck.scale_applied = scale;
    ck.ball_opt = ball_opt;
    ck.gen_opt = gen_opt;
    return ck;
}

}  // namespace detail

/// Applies the configured preprocessing (bijectivity rescale) against the given feature map.
inline Dataset prepare_training_data(const Dataset& data, const FeatureMap& fm, const TrainConfig& cfg) {
    return cfg.rescale_to_bijective ? rescale_to_bijective(data, fm) : data;
}

/// Runs both phases. When `resume` is given, training continues after its
/// epochs_completed with the stored state; the dataset must be the same one.
inline Checkpoint train(const Dataset& raw, const TrainConfig& cfg, const TrainHooks& hooks = {},
                        const std::string& config_json = {}, const Checkpoint* resume = nullptr) {
    validate(cfg);
    validate(raw);
    const Eigen::Index d = raw.dims();

    FeatureMap fm;
    Ball ball;
    Generator g;
    AdamState ball_opt, gen_opt;
    Rng shuffle(derive_seed(cfg.seed, SeedStream::shuffling));
    Rng noise(derive_seed(cfg.seed, SeedStream::noise));
    int start_epoch = 1;
    Dataset data;

    if (resume) {
        fm = resume->feature_map;
        ball = resume->ball;
        g = resume->generator;
        ball_opt = resume->ball_opt;
        gen_opt = resume->gen_opt;
        shuffle = rng_from_state(resume->shuffle_rng_state);
        noise = rng_from_state(resume->noise_rng_state);
        start_epoch = resume->epochs_completed + 1;
        data = raw;
        if (resume->scale_applied && !raw.scale_applied) {
            data.points = resume->scale_applied->apply(raw.points);
            data.scale_applied = resume->scale_applied;
        }
    } else {
        fm = build_feature_map(d, cfg.num_features, derive_seed(cfg.seed, SeedStream::feature_map),
                               Vector::Constant(d, cfg.initial_log_scale));
        g = build_generator(cfg.noise.dim, cfg.generator.layers(d), derive_seed(cfg.seed, SeedStream::generator_init));
        data = prepare_training_data(raw, fm, cfg);
    }
    if (fm.dims_in() != d || g.out_dim() != d) throw ConfigError("resume checkpoint does not match data dimension");
    const Matrix& X = data.points;
    const auto n = static_cast<std::size_t>(X.rows());
    const auto bs = static_cast<std::size_t>(cfg.batch_size);

    // Data feature map is fixed during phase 2.
    Matrix phi_data;

    for (int epoch = start_epoch; epoch <= cfg.total_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        if (epoch <= cfg.phase1_epochs) {
            rec.phase = 1;
            const auto order = shuffled_indices(X.rows(), shuffle);
            if (epoch == 1) {
                ball = init_ball(fm, gather_rows(X, order, 0, std::min(n, bs)), cfg.lambda);
                ball_opt = make_ball_adam(ball, fm);
            }
            ball_epoch(ball, fm, X, order, cfg, ball_opt, epoch);
            const auto s = evaluate_ball(ball, fm, X, epoch);
            if (!std::isfinite(s.objective))
                throw NumericalError("non-finite ball objective after epoch " + std::to_string(epoch));
            rec.objective = s.objective;
            rec.hinge_mean = s.hinge_mean;
            rec.violator_fraction = s.violator_fraction;
        } else {
            rec.phase = 2;
            if (gen_opt.m.empty()) gen_opt = AdamState(g.block_sizes());
            if (phi_data.size() == 0) phi_data = fm.map_batch(X);
            const auto order = shuffled_indices(X.rows(), shuffle);
            double loss_sum = 0.0, hinge_sum = 0.0, fm_sum = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < n; start += bs, ++batches) {
                const std::size_t end = std::min(n, start + bs);
                Vector mean_x = Vector::Zero(phi_data.cols());
                for (std::size_t k = start; k < end; ++k) mean_x += phi_data.row(order[k]).transpose();
                mean_x /= static_cast<double>(end - start);
                const Matrix Z = sample_noise(cfg.noise, static_cast<Eigen::Index>(end - start), noise);
                GeneratorLoss L;
                try {
                    L = generator_loss_from_mean(fm, ball, g, Z, mean_x, cfg.fm_weight);
                } catch (const NumericalError& e) {
                    throw NumericalError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches) + ")");
                }
                if (!std::isfinite(L.loss))
                    throw NumericalError("non-finite generator loss at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
                auto grads = grad_blocks(L.grads);
                try {
                    adam_step(gen_opt, param_blocks(g), grads, cfg.lr_gen);
                } catch (const NumericalError& e) {
                    throw NumericalError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches) + ")");
                }
                loss_sum += L.loss;
                hinge_sum += L.hinge;
                fm_sum += L.fm_term;
            }
            rec.objective = loss_sum / static_cast<double>(batches);
            rec.hinge_mean = hinge_sum / static_cast<double>(batches);
            rec.fm_gap = fm_sum / static_cast<double>(batches);
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (hooks.on_epoch) {
            if (hooks.want_checkpoints || epoch == cfg.total_epochs) {
                hooks.on_epoch(rec, detail::snapshot(cfg, config_json, epoch, fm, ball, g, shuffle, noise,
                                                     data.scale_applied, ball_opt, gen_opt));
            } else {
                hooks.on_epoch(rec, Checkpoint{});
            }
        }
    }
    return detail::snapshot(cfg, config_json, cfg.total_epochs, fm, ball, g, shuffle, noise, data.scale_applied,
                            ball_opt, gen_opt);
}

/// n generated samples in the original data coordinates.
inline Matrix generate(const Checkpoint& ck, Eigen::Index n, Rng& rng) {
    if (n < 1) throw ConfigError("generate: n must be >= 1");
    Matrix Y = ck.generator(sample_noise(ck.config.noise, n, rng));
    if (ck.scale_applied) Y = ck.scale_applied->invert(Y);
    return Y;
}

}  // namespace gen
