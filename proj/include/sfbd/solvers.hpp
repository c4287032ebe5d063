#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sfbd/denoiser.hpp"
#include "sfbd/errors.hpp"
#include "sfbd/rng.hpp"
#include "sfbd/vecmath.hpp"

namespace sfbd {

using ScoreFn = std::function<Point(const Point&, double)>;
using DenoiseFn = std::function<Point(const Point&, Rng&)>;

// x_t = x_0 + sqrt(t) z under the unit-diffusion kernel N(x_0, t I).
inline Point forward_sample(const Point& x0, double t, Rng& rng) {
    if (t < 0.0) throw ContractViolation("forward_sample: t must be >= 0");
    if (t == 0.0) return x0;
    Point x = x0;
    const double s = std::sqrt(t);
    for (double& v : x) v += s * normal_draw(rng);
    return x;
}

// s_t(x) = (D(x, t) - x) / t.
inline Point score_from_denoiser(const DenoiserModel& model, const Point& x, double t,
                                 bool use_ema = false) {
    if (t <= 0.0) throw ContractViolation("score_from_denoiser: t must be > 0");
    Point d = use_ema ? model.forward_ema(x, t) : model.forward(x, t);
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = (d[i] - x[i]) / t;
    return d;
}

inline ScoreFn make_score_fn(const DenoiserModel& model, bool use_ema = false) {
    // Snapshot parameters so the score stays frozen if the model trains on.
    auto params = use_ema ? model.ema : model.params;
    auto spec = model.spec;
    return [params = std::move(params), spec](const Point& x, double t) {
        Point d = mlp_forward(params, spec, x, t);
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = (d[i] - x[i]) / t;
        return d;
    };
}

enum class SolverScheme { EulerMaruyamaSde, HeunPflow };
enum class StepSpacing { Uniform, Polynomial };

struct SolverConfig {
    int n_steps = 24;
    SolverScheme scheme = SolverScheme::HeunPflow;
    StepSpacing spacing = StepSpacing::Polynomial;
    double rho = 7.0;

    void validate() const {
        if (n_steps < 1) throw ContractViolation("SolverConfig: n_steps must be >= 1");
    }
};

// Decreasing time grid from t_start to t_end with n intervals.
inline std::vector<double> solver_time_grid(double t_start, double t_end, const SolverConfig& cfg) {
    std::vector<double> ts(cfg.n_steps + 1);
    for (int i = 0; i <= cfg.n_steps; ++i) {
        const double frac = static_cast<double>(i) / cfg.n_steps;
        if (cfg.spacing == StepSpacing::Uniform) {
            ts[i] = t_start + frac * (t_end - t_start);
        } else {
            const double a = std::pow(t_start, 1.0 / cfg.rho);
            const double b = std::pow(t_end, 1.0 / cfg.rho);
            ts[i] = std::pow(a + frac * (b - a), cfg.rho);
        }
    }
    ts.front() = t_start;
    ts.back() = t_end;
    return ts;
}

// Integrates from t_start down to t_end. The SDE scheme is Euler-Maruyama on
// dx = -s_t(x) dt + dw reverse in time; the pflow scheme is Heun on the
// deterministic probability-flow ODE (per-step drift s/2), which shares the
// same marginals. Eq. (D - x)/t is singular at t = 0, so when t_end lies
// below the time floor the solver integrates to the floor and finishes with
// a single Euler sub-step whose score is evaluated at the floor.
inline Point backward_solve(const ScoreFn& score, Point x, double t_start, double t_end,
                            const SolverConfig& cfg, Rng& rng) {
    cfg.validate();
    if (!(t_end >= 0.0) || !(t_end < t_start)) {
        throw ContractViolation("backward_solve: need 0 <= t_end < t_start");
    }

    const double t_stop = std::max(t_end, kTimeFloor);
    const std::vector<double> ts = solver_time_grid(t_start, t_stop, cfg);

    auto check = [&](const Point& p, int step) {
        if (!all_finite(p)) {
            throw DivergedTrajectoryError("backward_solve: non-finite state", step);
        }
    };

    for (int i = 0; i < cfg.n_steps; ++i) {
        const double t = ts[i];
        const double t_next = ts[i + 1];
        const double dt = t_next - t;  // negative
        if (cfg.scheme == SolverScheme::EulerMaruyamaSde) {
            const Point s = score(x, t);
            const double h = -dt;
            for (std::size_t k = 0; k < x.size(); ++k) {
                x[k] += h * s[k] + std::sqrt(h) * normal_draw(rng);
            }
        } else {
            const Point d1 = score(x, t);
            Point xp = x;
            for (std::size_t k = 0; k < x.size(); ++k) xp[k] += dt * 0.5 * d1[k];
            const Point d2 = score(xp, t_next);
            for (std::size_t k = 0; k < x.size(); ++k) {
                x[k] += dt * 0.25 * (d1[k] + d2[k]);
            }
        }
        check(x, i);
    }

    if (t_end < t_stop) {
        const double h = t_stop - t_end;
        const Point s = score(x, t_stop);
        if (cfg.scheme == SolverScheme::EulerMaruyamaSde) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                x[k] += h * s[k] + std::sqrt(h) * normal_draw(rng);
            }
        } else {
            for (std::size_t k = 0; k < x.size(); ++k) x[k] += h * 0.5 * s[k];
        }
        check(x, cfg.n_steps);
    }
    return x;
}

// Denoiser for pool refreshes: solve the backward equation from tau to 0.
inline DenoiseFn make_denoise_fn(const DenoiserModel& model, double tau, const SolverConfig& cfg,
                                 bool use_ema = true) {
    ScoreFn score = make_score_fn(model, use_ema);
    return [score = std::move(score), tau, cfg](const Point& y, Rng& rng) {
        return backward_solve(score, y, tau, 0.0, cfg, rng);
    };
}

}  // namespace sfbd
