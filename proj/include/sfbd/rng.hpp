#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sfbd/vecmath.hpp"

namespace sfbd {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derives an independent stream from a base seed; used to hand each actor
// (trainer, denoiser, eval) its own generator.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{seed, stream ^ 0x9e3779b97f4a7c15ull};
    return Rng(seq);
}

inline double normal_draw(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

inline double uniform_draw(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
}

inline Point normal_point(Rng& rng, std::size_t dim) {
    Point z(dim);
    for (auto& v : z) v = normal_draw(rng);
    return z;
}

}  // namespace sfbd
