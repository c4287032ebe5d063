#pragma once

#include <cmath>
#include <cstddef>

#include "sfbd/errors.hpp"
#include "sfbd/vecmath.hpp"

namespace sfbd {

// Adam with bias correction.
struct OptimizerState {
    ParamVector first_moment;
    ParamVector second_moment;
    long step_count = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState init(std::size_t n_params, double lr = 1e-3) {
        OptimizerState s;
        s.first_moment.assign(n_params, 0.0);
        s.second_moment.assign(n_params, 0.0);
        s.learning_rate = lr;
        return s;
    }
};

inline void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad) {
    check_same_dim(params, grad, "optimizer_step");
    check_same_dim(params, state.first_moment, "optimizer_step");
    if (!all_finite(grad)) {
        throw NumericError("optimizer_step: non-finite gradient, step rejected");
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.first_moment[i] / bc1;
        const double v_hat = state.second_moment[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    if (!all_finite(params)) {
        throw NumericError("optimizer_step: parameters became non-finite");
    }
}

// shadow <- decay * shadow + (1 - decay) * params
inline void ema_update(ParamVector& shadow, const ParamVector& params, double decay) {
    if (decay < 0.0 || decay >= 1.0) {
        throw ContractViolation("ema_update: decay must be in [0, 1)");
    }
    check_same_dim(shadow, params, "ema_update");
    for (std::size_t i = 0; i < shadow.size(); ++i) {
        shadow[i] = decay * shadow[i] + (1.0 - decay) * params[i];
    }
}

}  // namespace sfbd
