#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace cpsim {

// splitmix64 finalizer; used to whiten seeds and derive stream seeds so
// (seed, stream) pairs give independent reproducible generators.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b), c);
}

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is pinned by the standard; every distribution transform lives
// here instead of <random> distributions (those are implementation-defined),
// so identical seeds give identical draws on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix64(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform over {0, ..., n-1}; mask rejection keeps it exactly uniform
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
        if (n == 1) return 0;
        std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(n - 1);
        for (;;) {
            std::uint64_t v = engine_() & mask;
            if (v < n) return v;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    double exponential(double mean) {
        if (!(mean > 0.0)) throw std::invalid_argument("exponential: mean must be > 0");
        return -mean * std::log1p(-uniform01());
    }

    // standard normal via Box-Muller (no caching, one value per call)
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // unit-scale gamma, Marsaglia-Tsang squeeze; shape < 1 boosted via U^(1/shape)
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
        if (shape < 1.0) {
            double u = 1.0 - uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = 1.0 - uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta: shapes must be > 0");
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

    // Number of transmissions until the first success when each attempt fails
    // with probability fail_prob: support {1, 2, ...}, mean 1/(1 - fail_prob).
    std::uint64_t geometric_trials(double fail_prob) {
        if (!(fail_prob >= 0.0) || fail_prob >= 1.0)
            throw std::domain_error("geometric_trials: failure probability must be in [0, 1)");
        if (fail_prob == 0.0) return 1;
        double u = uniform01();
        double r = std::ceil(std::log1p(-u) / std::log(fail_prob));
        if (!(r >= 1.0)) return 1;
        if (r >= 9.0e15) return std::uint64_t{9000000000000000};
        return static_cast<std::uint64_t>(r);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace cpsim
