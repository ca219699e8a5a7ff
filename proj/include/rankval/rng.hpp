#pragma once

// Counter-based, stream-split random generator. Stream k of seed s is an
// independent SplitMix64 sequence whose start state is a strong mix of
// (s, k), so per-unit streams can be drawn in any order (or in parallel)
// and still produce bitwise-identical simulations.

#include <cstdint>
#include <cmath>

#include "rankval/math/special.hpp"

namespace rankval {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}
}  // namespace detail

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : state_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                               detail::mix64(stream * 0xD2B74407B1CE6E93ULL + 1))) {}

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    // uniform on the open interval (0,1); safe for quantile transforms
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // integer uniform on {lo, ..., hi} inclusive
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return lo + next_u64() % (hi - lo + 1);
    }

    // standard normal via the inverse cdf (keeps draws a pure function of
    // the underlying uniform stream)
    double normal() { return norm_quantile(uniform()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Marsaglia-Tsang for shape >= 1; boost by u^(1/shape) below 1.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Gamma(shape, rate): mean shape/rate.
    double gamma(double shape, double rate) { return gamma(shape) / rate; }

    // InvGamma(shape, scale): 1/Gamma(shape, rate=scale).
    double inv_gamma(double shape, double scale) { return scale / gamma(shape); }

    double beta(double a, double b) {
        const double ga = gamma(a);
        const double gb = gamma(b);
        return ga / (ga + gb);
    }

    // Binomial(n, p) by cdf inversion; n stays modest (<= a few thousand)
    // everywhere this is used.
    long binomial(long n, double p) {
        if (n <= 0) return 0;
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        const double u = uniform();
        const double q = 1.0 - p;
        double pmf = std::exp(static_cast<double>(n) * std::log(q));
        if (pmf <= 0.0) {
            // deep underflow (large n, large p): invert the complement count
            return n - binomial_from(u, n, q);
        }
        double cdf = pmf;
        long k = 0;
        while (u > cdf && k < n) {
            ++k;
            pmf *= (static_cast<double>(n - k + 1) / static_cast<double>(k)) * (p / q);
            cdf += pmf;
        }
        return k;
    }

    // Hypergeometric: number of successes in a size-m draw without
    // replacement from a population with succ successes and fail failures.
    long hypergeometric(long succ, long fail, long m) {
        long got = 0;
        for (long i = 0; i < m; ++i) {
            const double p = static_cast<double>(succ) / static_cast<double>(succ + fail);
            if (uniform() < p) {
                ++got;
                --succ;
            } else {
                --fail;
            }
            if (succ == 0) break;
            if (fail == 0) { got += m - i - 1; break; }
        }
        return got;
    }

private:
    long binomial_from(double u, long n, double p) {
        const double q = 1.0 - p;
        double pmf = std::exp(static_cast<double>(n) * std::log(q));
        double cdf = pmf;
        long k = 0;
        u = 1.0 - u;
        while (u > cdf && k < n) {
            ++k;
            pmf *= (static_cast<double>(n - k + 1) / static_cast<double>(k)) * (p / q);
            cdf += pmf;
        }
        return k;
    }

    std::uint64_t state_;
};

}  // namespace rankval
