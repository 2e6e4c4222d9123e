#pragma once

#include "gen/common.hpp"

#include <vector>

namespace gen {

/// Adam moments for a fixed list of parameter blocks.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Vector> m;
    std::vector<Vector> v;

    AdamState() = default;
    explicit AdamState(const std::vector<Eigen::Index>& block_sizes) {
        for (auto n : block_sizes) {
            m.push_back(Vector::Zero(n));
            v.push_back(Vector::Zero(n));
        }
    }
};

using ParamBlock = Eigen::Map<Vector>;
using GradBlock = Eigen::Map<const Vector>;

template <typename Derived>
ParamBlock param_block(Eigen::PlainObjectBase<Derived>& m) {
    return ParamBlock(m.data(), m.size());
}
template <typename Derived>
GradBlock grad_block(const Eigen::PlainObjectBase<Derived>& m) {
    return GradBlock(m.data(), m.size());
}
inline ParamBlock param_block(double& x) { return ParamBlock(&x, 1); }
inline GradBlock grad_block(const double& x) { return GradBlock(&x, 1); }

/// One bias-corrected Adam update applied in place to every block.
inline void adam_step(AdamState& state, std::vector<ParamBlock> params, const std::vector<GradBlock>& grads,
                      double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: expected " + std::to_string(state.m.size()) + " parameter blocks, got " +
                         std::to_string(params.size()) + " params and " + std::to_string(grads.size()) + " grads");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != grads[k].size() || params[k].size() != state.m[k].size())
            throw ShapeError("adam_step: block " + std::to_string(k) + " shape mismatch");
        if (!grads[k].allFinite())
            throw NumericalError("adam_step: non-finite gradient in block " + std::to_string(k) + " at step " +
                                 std::to_string(state.step + 1));
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Vector& m = state.m[k];
        Vector& v = state.v[k];
        m = state.beta1 * m + (1.0 - state.beta1) * grads[k];
        v = state.beta2 * v + (1.0 - state.beta2) * grads[k].cwiseAbs2();
        params[k].array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
    }
}

}  // namespace gen
