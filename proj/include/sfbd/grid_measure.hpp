#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "sfbd/errors.hpp"
#include "sfbd/vecmath.hpp"

namespace sfbd {

// Nonnegative normalized mass on a uniform 1D node grid. The exact-oracle
// stand-in for the measures p_0^{k,gamma}, m_0^k, p_tau^* of the projection
// recursions: all projection identities are verified on this representation
// to near machine precision.
struct GridMeasure {
    double lo = -6.0;
    double hi = 6.0;
    int n = 1024;
    std::vector<double> mass;

    double spacing() const { return (hi - lo) / (n - 1); }
    double node(int i) const { return lo + i * spacing(); }

    void validate() const {
        if (n < 8) throw ContractViolation("GridMeasure: n must be >= 8");
        if (static_cast<int>(mass.size()) != n) {
            throw ContractViolation("GridMeasure: mass size does not match n");
        }
        double s = 0.0;
        for (double m : mass) {
            if (m < 0.0 || !std::isfinite(m)) {
                throw ContractViolation("GridMeasure: mass must be finite and nonnegative");
            }
            s += m;
        }
        if (std::abs(s - 1.0) > 1e-12) {
            throw ContractViolation("GridMeasure: mass must sum to 1 within 1e-12");
        }
    }

    void renormalize() {
        double s = 0.0;
        for (double m : mass) s += m;
        if (s <= 0.0) throw ContractViolation("GridMeasure: cannot renormalize zero mass");
        for (double& m : mass) m /= s;
    }

    static GridMeasure from_density(double lo, double hi, int n,
                                    const std::function<double(double)>& density) {
        GridMeasure g;
        g.lo = lo;
        g.hi = hi;
        g.n = n;
        g.mass.resize(n);
        for (int i = 0; i < n; ++i) g.mass[i] = std::max(0.0, density(g.node(i)));
        g.renormalize();
        return g;
    }

    static GridMeasure point_mass(double lo, double hi, int n, double c) {
        GridMeasure g;
        g.lo = lo;
        g.hi = hi;
        g.n = n;
        g.mass.assign(n, 0.0);
        int idx = static_cast<int>(std::lround((c - lo) / ((hi - lo) / (n - 1))));
        idx = std::clamp(idx, 0, n - 1);
        g.mass[idx] = 1.0;
        return g;
    }

    static GridMeasure uniform(double lo, double hi, int n) {
        GridMeasure g;
        g.lo = lo;
        g.hi = hi;
        g.n = n;
        g.mass.assign(n, 1.0 / n);
        return g;
    }

    // Gaussian KDE of an atom set plus a tiny uniform floor. Raw empirical
    // atoms make KL(p_data || p_clean) infinite; this is the documented
    // surrogate used wherever that KL enters a bound. Default bandwidth is
    // two grid cells; the floor keeps every node strictly positive.
    static GridMeasure mollified_atoms(double lo, double hi, int n, const std::vector<double>& atoms,
                                       double bandwidth = -1.0, double floor_weight = 1e-9) {
        if (atoms.empty()) throw ContractViolation("mollified_atoms: empty atom set");
        GridMeasure g;
        g.lo = lo;
        g.hi = hi;
        g.n = n;
        g.mass.assign(n, 0.0);
        const double bw = bandwidth > 0.0 ? bandwidth : 2.0 * g.spacing();
        for (double a : atoms) {
            for (int i = 0; i < n; ++i) {
                const double z = (g.node(i) - a) / bw;
                g.mass[i] += std::exp(-0.5 * z * z);
            }
        }
        g.renormalize();
        for (double& m : g.mass) m = (1.0 - floor_weight) * m + floor_weight / n;
        g.renormalize();
        return g;
    }
};

inline void check_same_grid(const GridMeasure& a, const GridMeasure& b, const char* where) {
    if (a.lo != b.lo || a.hi != b.hi || a.n != b.n) {
        throw ContractViolation(std::string(where) + ": measures live on different grids");
    }
}

inline double total_variation(const GridMeasure& a, const GridMeasure& b) {
    check_same_grid(a, b, "total_variation");
    double s = 0.0;
    for (int i = 0; i < a.n; ++i) s += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * s;
}

inline GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double w_b) {
    check_same_grid(a, b, "mix");
    GridMeasure out = a;
    for (int i = 0; i < a.n; ++i) out.mass[i] = (1.0 - w_b) * a.mass[i] + w_b * b.mass[i];
    return out;
}

inline double grid_mean(const GridMeasure& g) {
    double s = 0.0;
    for (int i = 0; i < g.n; ++i) s += g.node(i) * g.mass[i];
    return s;
}

inline double grid_variance(const GridMeasure& g) {
    const double mu = grid_mean(g);
    double s = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double d = g.node(i) - mu;
        s += d * d * g.mass[i];
    }
    return s;
}

// The discrete forward channel at level t: from each source node i, mass
// spreads to nodes j proportionally to exp(-(x_j - x_i)^2 / 2t), normalized
// per source so the channel is exactly stochastic. The projection
// inequalities then hold on the grid to machine precision because the same
// channel defines convolution, posterior and Bayes reweighting.
struct GridKernel {
    double t;
    int n;
    std::vector<double> g;       // g[|i - j|]
    std::vector<double> colsum;  // sum_j g[|i - j|] per source i
    bool truncated = false;      // kernel mass visibly lost at the boundary

    GridKernel(const GridMeasure& grid, double t_) : t(t_), n(grid.n), g(grid.n), colsum(grid.n, 0.0) {
        if (!(t_ > 0.0)) throw ContractViolation("GridKernel: t must be > 0");
        const double h = grid.spacing();
        for (int d = 0; d < n; ++d) {
            const double z = d * h / std::sqrt(t_);
            g[d] = std::exp(-0.5 * z * z);
        }
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g[std::abs(i - j)];
            colsum[i] = s;
        }
        // Compare the center column against an untruncated discrete kernel.
        double full = g[0];
        for (int d = 1; d < n; ++d) full += 2.0 * g[d];
        if (colsum[n / 2] < full * (1.0 - 1e-9)) truncated = true;
    }
};

struct ConvolveInfo {
    bool truncation_warning = false;
};

// p_t = channel(p_0): the grid analogue of convolving with N(0, t).
inline GridMeasure grid_convolve(const GridMeasure& p, double t, ConvolveInfo* info = nullptr) {
    p.validate();
    if (!(t > 0.0)) throw ContractViolation("grid_convolve: t must be > 0");
    const GridKernel kern(p, t);
    if (info) info->truncation_warning = kern.truncated;
    GridMeasure out = p;
    std::fill(out.mass.begin(), out.mass.end(), 0.0);
    for (int i = 0; i < p.n; ++i) {
        const double w = p.mass[i] / kern.colsum[i];
        if (w == 0.0) continue;
        for (int j = 0; j < p.n; ++j) out.mass[j] += w * kern.g[std::abs(i - j)];
    }
    out.renormalize();
    return out;
}

inline GridMeasure grid_convolve(const GridMeasure& p, const GridKernel& kern) {
    GridMeasure out = p;
    std::fill(out.mass.begin(), out.mass.end(), 0.0);
    for (int i = 0; i < p.n; ++i) {
        const double w = p.mass[i] / kern.colsum[i];
        if (w == 0.0) continue;
        for (int j = 0; j < p.n; ++j) out.mass[j] += w * kern.g[std::abs(i - j)];
    }
    out.renormalize();
    return out;
}

// E[x_0 | x_t = x] under prior p0 and the continuous Gaussian kernel. When x
// sits so far out that every weight underflows, returns the nearest support
// edge and sets the flag.
inline double grid_posterior_mean(const GridMeasure& p0, double t, double x,
                                  bool* underflow = nullptr) {
    if (!(t > 0.0)) throw ContractViolation("grid_posterior_mean: t must be > 0");
    if (underflow) *underflow = false;
    double num = 0.0;
    double den = 0.0;
    // Shift exponents by the max to dodge underflow of all weights at once.
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < p0.n; ++i) {
        if (p0.mass[i] == 0.0) continue;
        const double d = x - p0.node(i);
        const double e = -0.5 * d * d / t + std::log(p0.mass[i]);
        best = std::max(best, e);
    }
    if (!std::isfinite(best)) {
        if (underflow) *underflow = true;
        return x < 0.5 * (p0.lo + p0.hi) ? p0.lo : p0.hi;
    }
    for (int i = 0; i < p0.n; ++i) {
        if (p0.mass[i] == 0.0) continue;
        const double d = x - p0.node(i);
        const double w = std::exp(-0.5 * d * d / t + std::log(p0.mass[i]) - best);
        num += p0.node(i) * w;
        den += w;
    }
    return num / den;
}

// The exact law of denoised samples: posterior Bayes reweighting of the
// noisy target law p_tau^* under prior p0k, composed over the shared grid
// channel. No SDE integration is involved.
inline GridMeasure grid_m_step(const GridMeasure& p0k, const GridMeasure& p_tau_star,
                               const GridKernel& kern) {
    check_same_grid(p0k, p_tau_star, "grid_m_step");
    const int n = p0k.n;
    // q_j = model law at level tau
    std::vector<double> q(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double w = p0k.mass[i] / kern.colsum[i];
        if (w == 0.0) continue;
        for (int j = 0; j < n; ++j) q[j] += w * kern.g[std::abs(i - j)];
    }
    for (int j = 0; j < n; ++j) {
        if (q[j] == 0.0 && p_tau_star.mass[j] > 0.0) {
            throw SupportMismatchError(
                "grid_m_step: model law vanishes where the noisy target has mass (node " +
                std::to_string(j) + ")");
        }
    }
    GridMeasure m0 = p0k;
    for (int i = 0; i < n; ++i) {
        const double w = p0k.mass[i] / kern.colsum[i];
        if (w == 0.0) {
            m0.mass[i] = 0.0;
            continue;
        }
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            if (p_tau_star.mass[j] == 0.0) continue;
            s += kern.g[std::abs(i - j)] * p_tau_star.mass[j] / q[j];
        }
        m0.mass[i] = w * s;
    }
    m0.renormalize();
    return m0;
}

// KL(p || q) = sum p_i log(p_i / q_i), with 0 log 0 = 0. Returns +inf when q
// vanishes somewhere p does not.
inline double kl_divergence(const GridMeasure& p, const GridMeasure& q) {
    check_same_grid(p, q, "kl_divergence");
    double s = 0.0;
    for (int i = 0; i < p.n; ++i) {
        if (p.mass[i] == 0.0) continue;
        if (q.mass[i] == 0.0) return std::numeric_limits<double>::infinity();
        s += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
    }
    return std::max(0.0, s);
}

// The gamma-relaxed projection recursion computed exactly on the grid:
//   m_0^k   = m_step(p_0^k)
//   p_0^{k+1} = (1umgamma) p_0^k + gamma m_0^k
// starting from the (mollified) clean empirical law.
struct GridGammaTrajectory {
    std::vector<GridMeasure> p0;  // k = 0..K
    std::vector<GridMeasure> m0;  // k = 0..K-1
    GridMeasure p_tau_star;
};

inline GridGammaTrajectory grid_gamma_sfbd(const GridMeasure& p_data, const GridMeasure& p_clean_emp,
                                           double tau, double gamma, int K) {
    if (!(gamma > 0.0) || gamma > 1.0) {
        throw ContractViolation("grid_gamma_sfbd: gamma must be in (0, 1]");
    }
    if (K < 1) throw ContractViolation("grid_gamma_sfbd: K must be >= 1");
    check_same_grid(p_data, p_clean_emp, "grid_gamma_sfbd");
    const GridKernel kern(p_data, tau);
    GridGammaTrajectory traj;
    traj.p_tau_star = grid_convolve(p_data, kern);
    traj.p0.push_back(p_clean_emp);
    for (int k = 0; k < K; ++k) {
        traj.m0.push_back(grid_m_step(traj.p0.back(), traj.p_tau_star, kern));
        GridMeasure next = mix(traj.p0.back(), traj.m0.back(), gamma);
        next.renormalize();
        traj.p0.push_back(std::move(next));
    }
    return traj;
}

// Explicit Euler on the measure flow dp/dkappa = m_0(p) - p; an Euler step
// with d_kappa is exactly one gamma-step with gamma = d_kappa.
struct GridFlowTrajectory {
    std::vector<double> kappa;
    std::vector<GridMeasure> p0;
    GridMeasure p_tau_star;
    double max_mass_drift = 0.0;  // per-step |sum - 1| before renormalization
    bool clamped_negative = false;
};

inline GridFlowTrajectory grid_flow_integrate(const GridMeasure& p_data,
                                              const GridMeasure& p_clean_emp, double tau,
                                              double d_kappa, double kappa_max) {
    if (!(d_kappa > 0.0)) throw ContractViolation("grid_flow_integrate: d_kappa must be > 0");
    check_same_grid(p_data, p_clean_emp, "grid_flow_integrate");
    const GridKernel kern(p_data, tau);
    GridFlowTrajectory traj;
    traj.p_tau_star = grid_convolve(p_data, kern);
    traj.kappa.push_back(0.0);
    traj.p0.push_back(p_clean_emp);
    const int steps = static_cast<int>(std::round(kappa_max / d_kappa));
    GridMeasure p = p_clean_emp;
    for (int s = 1; s <= steps; ++s) {
        const GridMeasure m0 = grid_m_step(p, traj.p_tau_star, kern);
        double mass = 0.0;
        for (int i = 0; i < p.n; ++i) {
            p.mass[i] += d_kappa * (m0.mass[i] - p.mass[i]);
            if (p.mass[i] < 0.0) {
                p.mass[i] = 0.0;
                traj.clamped_negative = true;
            }
            mass += p.mass[i];
        }
        traj.max_mass_drift = std::max(traj.max_mass_drift, std::abs(mass - 1.0));
        p.renormalize();
        traj.kappa.push_back(s * d_kappa);
        traj.p0.push_back(p);
    }
    return traj;
}

}  // namespace sfbd
