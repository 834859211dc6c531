#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "anpbbo/tensor/layers.hpp"

namespace anpbbo::tensor {

struct AdamState {
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<Tensor2> first_moment;
    std::vector<Tensor2> second_moment;

    static AdamState for_parameters(const ParameterStore& params)
    {
        AdamState s;
        s.first_moment = params.zeros_like();
        s.second_moment = params.zeros_like();
        return s;
    }
};

/// One bias-corrected Adam update of every tensor in `params`. All
/// gradients are checked before anything is modified, so a non-finite
/// gradient leaves both the parameters and the state untouched.
inline void adam_step(AdamState& state, ParameterStore& params, const std::vector<Tensor2>& grads, double lr)
{
    if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size())
        throw ConfigurationError("adam_step: parameter, gradient and state counts differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor2& p = params.value(i);
        const Tensor2& g = grads[i];
        if (g.rows() != p.rows() || g.cols() != p.cols() || state.first_moment[i].rows() != p.rows() ||
            state.first_moment[i].cols() != p.cols())
            throw ConfigurationError("adam_step: shape mismatch for '" + params.name(i) + "'");
        if (!g.allFinite())
            throw TrainingError("non-finite gradient in '" + params.name(i) + "'", params.name(i));
    }

    ++state.step;
    const auto t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor2& m = state.first_moment[i];
        Tensor2& v = state.second_moment[i];
        const Tensor2& g = grads[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        params.value(i).array() -=
            lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + state.epsilon);
    }
}

} // namespace anpbbo::tensor
