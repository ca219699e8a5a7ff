#pragma once

// Empirical quantiles on sorted data plus the pool-adjacent-violators
// isotonic projection used for optional lambda-curve monotonization.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace rankval {

enum class QuantileRule {
    Midpoint,   // h = n*p + 0.5 (Hyndman-Fan type 5)
    Interp      // h = (n-1)*p + 1 (Hyndman-Fan type 7, R default)
};

// Linear-interpolation quantile of sorted data at probability p in [0,1].
inline double quantile_sorted(std::span<const double> sorted, double p,
                              QuantileRule rule = QuantileRule::Interp) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty data");
    const double n = static_cast<double>(sorted.size());
    p = std::clamp(p, 0.0, 1.0);
    double h = (rule == QuantileRule::Midpoint) ? n * p + 0.5 : (n - 1.0) * p + 1.0;
    h = std::clamp(h, 1.0, n);
    const std::size_t i = static_cast<std::size_t>(h);  // 1-based floor
    const double frac = h - static_cast<double>(i);
    if (i >= sorted.size()) return sorted.back();
    return sorted[i - 1] + frac * (sorted[i] - sorted[i - 1]);
}

inline double quantile(std::vector<double> data, double p,
                       QuantileRule rule = QuantileRule::Interp) {
    std::sort(data.begin(), data.end());
    return quantile_sorted(data, p, rule);
}

// Weighted least-squares isotonic regression (non-decreasing), PAVA.
inline std::vector<double> isotonic_increasing(std::span<const double> y) {
    const std::size_t n = y.size();
    std::vector<double> level(n), weight(n);
    std::vector<std::size_t> count(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        level[blocks] = y[i];
        weight[blocks] = 1.0;
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            level[blocks - 2] =
                (level[blocks - 2] * weight[blocks - 2] + level[blocks - 1] * weight[blocks - 1]) / w;
            weight[blocks - 2] = w;
            count[blocks - 2] += count[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b)
        out.insert(out.end(), count[b], level[b]);
    return out;
}

inline std::vector<double> isotonic_decreasing(std::span<const double> y) {
    std::vector<double> neg(y.begin(), y.end());
    for (double& v : neg) v = -v;
    std::vector<double> fit = isotonic_increasing(neg);
    for (double& v : fit) v = -v;
    return fit;
}

}  // namespace rankval
