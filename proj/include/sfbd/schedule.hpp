#pragma once

#include <cmath>
#include <functional>

#include "sfbd/denoiser.hpp"
#include "sfbd/errors.hpp"
#include "sfbd/rng.hpp"

namespace sfbd {

enum class TimeLaw { Uniform, LogUniform, PointMass };

// Corruption level tau (noise variance, tau = sigma^2), horizon T, the
// sampling law for training times over [t_lo, t_hi], and the loss weight.
// The default weight (1+t)/t matches the preconditioning so the per-t
// gradient scale stays flat under the Var(x_t) = Var(x_0) + t kernel.
struct DiffusionSchedule {
    double tau = 0.25;
    double horizon = 20.0;
    double t_lo = kTimeFloor;
    double t_hi = 20.0;
    TimeLaw time_law = TimeLaw::LogUniform;
    double point_mass_time = 0.25;
    std::function<double(double)> weight = default_weight;

    static double default_weight(double t) { return (1.0 + t) / t; }

    void validate() const {
        if (!(tau > 0.0) || tau > horizon) {
            throw ContractViolation("DiffusionSchedule: need 0 < tau <= T");
        }
        if (!(t_lo > 0.0) || t_lo > t_hi || t_hi > horizon) {
            throw ContractViolation("DiffusionSchedule: need 0 < t_lo <= t_hi <= T");
        }
    }

    static DiffusionSchedule for_sigma(double sigma, double horizon = 20.0) {
        DiffusionSchedule s;
        s.tau = sigma * sigma;
        s.horizon = horizon;
        s.t_hi = horizon;
        s.point_mass_time = s.tau;
        return s;
    }

    // Same schedule but with training times restricted to [t_lo, hi].
    DiffusionSchedule with_time_range(double lo, double hi) const {
        DiffusionSchedule s = *this;
        s.t_lo = lo;
        s.t_hi = hi;
        return s;
    }
};

inline double sample_time(const DiffusionSchedule& schedule, Rng& rng) {
    switch (schedule.time_law) {
        case TimeLaw::Uniform:
            return uniform_draw(rng, schedule.t_lo, schedule.t_hi);
        case TimeLaw::LogUniform:
            return std::exp(uniform_draw(rng, std::log(schedule.t_lo), std::log(schedule.t_hi)));
        case TimeLaw::PointMass:
            return schedule.point_mass_time;
    }
    throw ContractViolation("sample_time: unknown time law");
}

}  // namespace sfbd
