#ifndef STOCHSIM_RNG_HPP
#define STOCHSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "stochsim/errors.hpp"
#include "stochsim/types.hpp"

namespace stochsim {

// Seeded generator with explicitly spelled-out draw algorithms, so that a
// given seed produces the same stream on every build of this project.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Replicate-friendly derived seed: worker i uses seed + i.
    static Rng derived(std::uint64_t seed, std::uint64_t i) { return Rng(seed + i); }

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
    }

    Complex normal_complex() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

    // Inverse-CDF draw from unnormalized non-negative weights.
    int categorical(const double *w, int n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += w[i];
        if (!(total > 0.0))
            throw DomainError("categorical draw from all-zero weights");
        double u = uniform() * total;
        for (int i = 0; i < n; ++i) {
            u -= w[i];
            if (u < 0.0) return i;
        }
        return n - 1;
    }

    int categorical(const RealVector &w) { return categorical(w.data(), static_cast<int>(w.size())); }

  private:
    std::mt19937_64 engine_;
};

} // namespace stochsim

#endif
