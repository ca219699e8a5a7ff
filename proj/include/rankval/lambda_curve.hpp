#pragma once

// The alpha grid and the system-wide quantile curve lambda_alpha:
// raw empirical (1-alpha) quantiles of each V-matrix column, a Gaussian
// moving average over grid index to mitigate sampling effects, and
// piecewise-linear interpolation (flat outside the grid).

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/math/quantiles.hpp"
#include "rankval/math/special.hpp"

namespace rankval {

struct AlphaGrid {
    std::vector<double> nodes;  // strictly increasing, inside (0,1)

    std::size_t size() const { return nodes.size(); }

    // strict monotonicity inside (0,1); enough for V/lambda construction
    void validate_basic() const {
        if (nodes.empty()) throw UsageError("AlphaGrid: empty");
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            if (!(nodes[j] > 0.0 && nodes[j] < 1.0))
                throw UsageError("AlphaGrid: nodes must lie in (0,1)");
            if (j > 0 && !(nodes[j] > nodes[j - 1]))
                throw UsageError("AlphaGrid: nodes must be strictly increasing");
        }
    }

    // solver-grade coverage. The near-zero bound relaxes to 0.003 so the
    // population-aware grids of small collections can stop at ~1/N -- any
    // deeper and the empirical lambda quantile degenerates to the sample
    // maximum, censoring the top unit at the boundary.
    void validate() const {
        validate_basic();
        if (nodes.size() < 2) throw UsageError("AlphaGrid: need at least 2 nodes");
        if (!(nodes.front() <= 0.003)) throw UsageError("AlphaGrid: min node must be <= 0.003");
        if (!(nodes.back() >= 0.99)) throw UsageError("AlphaGrid: max node must be >= 0.99");
    }

    // Default grid: enriched near zero on the log2(-log2 alpha) scale from
    // alpha_lo up to 0.5, then uniform on the probit scale up to alpha_hi.
    // Probit spacing keeps the lambda curve slowly varying per node at the
    // top end, where it climbs steeply in alpha.
    static AlphaGrid make_default(std::size_t n = 199, double alpha_lo = 1e-4,
                                  double alpha_hi = 0.9995) {
        AlphaGrid g;
        g.nodes.reserve(n);
        const std::size_t n_low = (n * 3) / 5;      // enriched part, includes 0.5
        const std::size_t n_high = n - n_low;       // probit-uniform (0.5, alpha_hi]
        const double w_lo = std::log2(-std::log2(alpha_lo));
        for (std::size_t j = 0; j < n_low; ++j) {
            const double w = w_lo * (1.0 - static_cast<double>(j) / static_cast<double>(n_low - 1));
            g.nodes.push_back(std::exp2(-std::exp2(w)));
        }
        g.nodes.front() = alpha_lo;  // kill the log2/exp2 round-trip error
        g.nodes[n_low - 1] = 0.5;
        const double probit_hi = norm_quantile(alpha_hi);
        for (std::size_t j = 1; j <= n_high; ++j) {
            g.nodes.push_back(norm_cdf(probit_hi * static_cast<double>(j) /
                                       static_cast<double>(n_high)));
        }
        g.nodes.back() = alpha_hi;
        g.validate();
        return g;
    }

    // Population-aware default: the empirical (1-alpha) quantile of N
    // values is only estimable down to alpha ~ 1/N, so the grid ends clamp
    // to that band. Beyond it the extreme columns reduce to the sample
    // max/min and every run would censor its top units at the boundary.
    static AlphaGrid make_for_units(std::size_t n_units, std::size_t n = 199) {
        const double unit_mass = 1.0 / std::max<double>(1.0, static_cast<double>(n_units));
        const double lo = std::clamp(1.2 * unit_mass, 1e-4, 3e-3);
        const double hi = std::clamp(1.0 - 0.5 * unit_mass, 0.99, 0.9995);
        return make_default(n, lo, hi);
    }
};

struct SmoothingConfig {
    double bandwidth = 5.0;      // Gaussian kernel sd, in grid-index units
    bool isotonic = false;       // optional decreasing projection, off by default
};

struct LambdaCurve {
    std::vector<double> grid;      // alpha nodes
    std::vector<double> raw;       // lambda0
    std::vector<double> smoothed;  // lambda-hat
    std::vector<std::string> warnings;

    // Piecewise-linear in alpha on the smoothed values; flat beyond ends.
    double evaluate(double alpha) const {
        if (alpha <= grid.front()) return smoothed.front();
        if (alpha >= grid.back()) return smoothed.back();
        const auto it = std::upper_bound(grid.begin(), grid.end(), alpha);
        const std::size_t j = static_cast<std::size_t>(it - grid.begin());
        const double t = (alpha - grid[j - 1]) / (grid[j] - grid[j - 1]);
        return smoothed[j - 1] + t * (smoothed[j] - smoothed[j - 1]);
    }
};

namespace detail {

// Gaussian-kernel local-linear smoother. The fit coordinate is the probit
// of alpha, where lambda curves vary slowly and node spacing is natural;
// bandwidth is given in node units and translated to the local coordinate
// scale. Local-linear weights reproduce constants and straight lines
// exactly, so no bias appears at the grid ends or at spacing changes.
inline std::vector<double> local_linear_smooth(std::span<const double> y,
                                               std::span<const double> coord,
                                               double bandwidth_nodes) {
    const std::size_t n = y.size();
    if (bandwidth_nodes <= 0.0 || n < 3) return std::vector<double>(y.begin(), y.end());
    std::vector<double> out(n);
    const int half = static_cast<int>(std::ceil(4.0 * bandwidth_nodes));
    for (std::size_t j = 0; j < n; ++j) {
        const int lo = std::max<int>(0, static_cast<int>(j) - half);
        const int hi = std::min<int>(static_cast<int>(n) - 1, static_cast<int>(j) + half);
        const double h =
            bandwidth_nodes * (coord[static_cast<std::size_t>(hi)] -
                               coord[static_cast<std::size_t>(lo)]) /
            std::max(1, hi - lo);
        double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
        for (int k = lo; k <= hi; ++k) {
            const double d = coord[static_cast<std::size_t>(k)] - coord[j];
            const double w = std::exp(-0.5 * (d / h) * (d / h));
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * y[static_cast<std::size_t>(k)];
            t1 += w * d * y[static_cast<std::size_t>(k)];
        }
        const double denom = s0 * s2 - s1 * s1;
        out[j] = denom > 1e-300 ? (s2 * t0 - s1 * t1) / denom : t0 / s0;
    }
    return out;
}

inline std::vector<double> probit_coordinates(std::span<const double> alphas) {
    std::vector<double> z(alphas.size());
    for (std::size_t j = 0; j < alphas.size(); ++j)
        z[j] = norm_quantile(std::clamp(alphas[j], 1e-15, 1.0 - 1e-15));
    return z;
}

}  // namespace detail

// Builds the curve from per-column V samples. `column` must yield the j-th
// column of the V matrix (all units' tail probabilities at alpha_j).
template <class ColumnFn>
LambdaCurve build_lambda_curve_columns(ColumnFn&& column, const AlphaGrid& grid,
                                       std::size_t n_units, const SmoothingConfig& cfg = {}) {
    grid.validate_basic();
    LambdaCurve curve;
    curve.grid = grid.nodes;
    curve.raw.resize(grid.size());
    if (n_units < 50)
        curve.warnings.push_back("fewer than 50 units: empirical lambda quantiles are noisy");
    std::vector<double> col;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        col = column(j);
        std::sort(col.begin(), col.end());
        curve.raw[j] = quantile_sorted(col, 1.0 - grid.nodes[j], QuantileRule::Interp);
    }
    curve.smoothed =
        detail::local_linear_smooth(curve.raw, detail::probit_coordinates(grid.nodes),
                                    cfg.bandwidth);
    if (cfg.isotonic) curve.smoothed = isotonic_decreasing(curve.smoothed);
    for (double& v : curve.smoothed) v = std::clamp(v, 0.0, 1.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (std::fabs(curve.smoothed[j] - curve.raw[j]) > 0.1) {
            curve.warnings.push_back("smoothing moved lambda at alpha=" +
                                     std::to_string(grid.nodes[j]) + " by more than 0.1");
            break;
        }
    }
    return curve;
}

}  // namespace rankval
