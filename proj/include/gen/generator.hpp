#pragma once

// Fully connected generator G(z) with a hand-rolled reverse pass.
// Batches are row-major in the sample index: Z is n x noise_dim, outputs n x out_dim.

#include "gen/adam.hpp"
#include "gen/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gen {

enum class Activation : std::uint32_t { identity = 0, softplus = 1, sigmoid = 2 };

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::softplus: return "softplus";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
    if (s == "identity" || s == "linear") return Activation::identity;
    if (s == "softplus") return Activation::softplus;
    if (s == "sigmoid") return Activation::sigmoid;
    return std::nullopt;
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::softplus: return softplus(x);
        case Activation::sigmoid: return sigmoid(x);
    }
    return x;
}

// Derivative expressed in terms of the pre-activation.
inline double activate_grad(Activation a, double x) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::softplus: return sigmoid(x);
        case Activation::sigmoid: {
            const double s = sigmoid(x);
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

struct LayerSpec {
    Eigen::Index out = 0;
    Activation act = Activation::identity;
};

struct Layer {
    RowMatrix weight;  // out x in
    Vector bias;       // out
    Activation act = Activation::identity;

    Eigen::Index in() const { return weight.cols(); }
    Eigen::Index out() const { return weight.rows(); }
};

enum class NoiseKind : std::uint32_t { uniform = 0, normal = 1 };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::uniform;
    Eigen::Index dim = 1;
};

inline std::string_view to_string(NoiseKind k) { return k == NoiseKind::uniform ? "uniform" : "normal"; }

inline std::optional<NoiseKind> parse_noise_kind(std::string_view s) {
    if (s == "uniform") return NoiseKind::uniform;
    if (s == "normal" || s == "gaussian") return NoiseKind::normal;
    return std::nullopt;
}

/// n draws, one per row. uniform is U(-1, 1), normal is N(0, 1).
inline Matrix sample_noise(const NoiseSpec& spec, Eigen::Index n, Rng& rng) {
    require(n >= 1, "sample_noise: n must be >= 1");
    require(spec.dim >= 1, "sample_noise: noise dimension must be >= 1");
    Matrix Z(n, spec.dim);
    if (spec.kind == NoiseKind::uniform) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < spec.dim; ++j) Z(i, j) = u(rng);
    } else {
        std::normal_distribution<double> g(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < spec.dim; ++j) Z(i, j) = g(rng);
    }
    return Z;
}

/// Per-layer values recorded by forward(): inputs[l] feeds layer l, pre[l] is its pre-activation.
struct Tape {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
    Matrix output;
};

struct GeneratorGrads {
    std::vector<RowMatrix> weight;
    std::vector<Vector> bias;
};

class Generator {
public:
    Generator() = default;
    Generator(Eigen::Index noise_dim, std::vector<Layer> layers) : noise_dim_(noise_dim), layers_(std::move(layers)) {
        require(noise_dim_ >= 1, "generator noise dimension must be >= 1");
        require(!layers_.empty(), "generator needs at least one layer");
        Eigen::Index prev = noise_dim_;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            require(L.in() == prev, "layer " + std::to_string(l) + " expects input width " + std::to_string(L.in()) +
                                        " but previous width is " + std::to_string(prev));
            require(L.bias.size() == L.out(), "layer " + std::to_string(l) + " bias length mismatch");
            prev = L.out();
        }
    }

    Eigen::Index noise_dim() const { return noise_dim_; }
    Eigen::Index out_dim() const { return layers_.back().out(); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& mutable_layers() { return layers_; }

    Eigen::Index num_params() const {
        Eigen::Index n = 0;
        for (const auto& L : layers_) n += L.weight.size() + L.bias.size();
        return n;
    }

    /// Parameter block sizes in the order used by param_blocks()/grad_blocks().
    std::vector<Eigen::Index> block_sizes() const {
        std::vector<Eigen::Index> s;
        for (const auto& L : layers_) {
            s.push_back(L.weight.size());
            s.push_back(L.bias.size());
        }
        return s;
    }

    Tape forward(const Matrix& Z) const {
        require(Z.cols() == noise_dim_, "forward: noise has width " + std::to_string(Z.cols()) + ", expected " +
                                            std::to_string(noise_dim_));
        Tape tape;
        Matrix h = Z;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            Matrix a = h * L.weight.transpose();
            a.rowwise() += L.bias.transpose();
            if (!a.allFinite())
                throw NumericalError("forward: non-finite pre-activation in layer " + std::to_string(l));
            tape.inputs.push_back(std::move(h));
            h = a.unaryExpr([act = L.act](double x) { return activate(act, x); });
            tape.pre.push_back(std::move(a));
        }
        tape.output = std::move(h);
        return tape;
    }

    Matrix operator()(const Matrix& Z) const { return forward(Z).output; }

    /// Gradients of sum_{rows} d_out . output w.r.t. every weight and bias.
    GeneratorGrads backward(const Tape& tape, const Matrix& d_out) const {
        if (tape.pre.size() != layers_.size() || tape.inputs.size() != layers_.size())
            throw ShapeError("backward: tape has " + std::to_string(tape.pre.size()) + " layers, generator has " +
                             std::to_string(layers_.size()));
        if (d_out.rows() != tape.output.rows() || d_out.cols() != tape.output.cols())
            throw ShapeError("backward: output gradient shape does not match the tape");
        GeneratorGrads g;
        g.weight.resize(layers_.size());
        g.bias.resize(layers_.size());
        Matrix delta = d_out;
        for (std::size_t k = layers_.size(); k-- > 0;) {
            const auto& L = layers_[k];
            if (tape.pre[k].cols() != L.out() || tape.inputs[k].cols() != L.in())
                throw ShapeError("backward: tape layer " + std::to_string(k) + " shape mismatch");
            if (L.act != Activation::identity)
                delta.array() *= tape.pre[k].unaryExpr([act = L.act](double x) { return activate_grad(act, x); }).array();
            g.weight[k] = delta.transpose() * tape.inputs[k];
            g.bias[k] = delta.colwise().sum().transpose();
            if (k > 0) delta = delta * L.weight;
        }
        return g;
    }

    /// Gradient w.r.t. the noise input, for completeness of the chain (n x noise_dim).
    Matrix input_gradient(const Tape& tape, const Matrix& d_out) const {
        Matrix delta = d_out;
        for (std::size_t k = layers_.size(); k-- > 0;) {
            const auto& L = layers_[k];
            if (L.act != Activation::identity)
                delta.array() *= tape.pre[k].unaryExpr([act = L.act](double x) { return activate_grad(act, x); }).array();
            delta = delta * L.weight;
        }
        return delta;
    }

private:
    Eigen::Index noise_dim_ = 0;
    std::vector<Layer> layers_;
};

inline std::vector<GradBlock> grad_blocks(const GeneratorGrads& g) {
    std::vector<GradBlock> out;
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        out.emplace_back(g.weight[l].data(), g.weight[l].size());
        out.emplace_back(g.bias[l].data(), g.bias[l].size());
    }
    return out;
}

inline std::vector<ParamBlock> param_blocks(Generator& gen) {
    std::vector<ParamBlock> out;
    for (auto& L : gen.mutable_layers()) {
        out.emplace_back(L.weight.data(), L.weight.size());
        out.emplace_back(L.bias.data(), L.bias.size());
    }
    return out;
}

/// Weights ~ N(0, 1/fan_in), biases zero.
inline Generator build_generator(Eigen::Index noise_dim, const std::vector<LayerSpec>& arch, std::uint64_t seed) {
    if (arch.empty()) throw ShapeError("build_generator: architecture is empty");
    if (noise_dim < 1) throw ShapeError("build_generator: noise dimension must be >= 1");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Layer> layers;
    Eigen::Index prev = noise_dim;
    for (const auto& spec : arch) {
        if (spec.out < 1) throw ShapeError("build_generator: layer width must be >= 1");
        Layer L;
        L.act = spec.act;
        L.weight.resize(spec.out, prev);
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(prev));
        for (Eigen::Index i = 0; i < L.weight.size(); ++i) L.weight.data()[i] = std_dev * normal(rng);
        L.bias = Vector::Zero(spec.out);
        layers.push_back(std::move(L));
        prev = spec.out;
    }
    return Generator(noise_dim, std::move(layers));
}

}  // namespace gen
