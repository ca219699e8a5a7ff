#pragma once

// The r-value engine. Two routes:
//  - the generic grid algorithm: V matrix over an alpha grid, empirical
//    lambda curve, then per-unit root solving of V_alpha = lambda_alpha;
//  - the normal/normal closed form: invert x = t*_r(sigma2) with
//    t*_r(s) = theta_r (s+1) - u_r sqrt(s(s+1)) and u_r from the marginal
//    size constraint under the variance law.

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/lambda_curve.hpp"
#include "rankval/math/quadrature.hpp"
#include "rankval/math/roots.hpp"
#include "rankval/math/special.hpp"
#include "rankval/model.hpp"
#include "rankval/parallel.hpp"
#include "rankval/tail_prob.hpp"

namespace rankval {

// ---------------------------------------------------------------------------
// V matrix

struct VMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row-major

    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data).subspan(i * cols, cols);
    }
};

// v[i,j] = V_{alpha_j}(D_i). Rows are non-decreasing left to right.
inline VMatrix build_v_matrix(const Dataset& ds, const PriorSpec& prior, const AlphaGrid& grid) {
    grid.validate_basic();
    VMatrix m;
    m.rows = ds.size();
    m.cols = grid.size();
    m.data.resize(m.rows * m.cols);
    std::vector<double> thetas(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        thetas[j] = prior_upper_quantile(prior.theta_law, grid.nodes[j]);
    parallel_for(ds.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const TailProbFn tail(ds.units[i], prior);
            for (std::size_t j = 0; j < grid.size(); ++j)
                m.data[i * m.cols + j] = tail.evaluate_at_theta(thetas[j]);
        }
    });
    return m;
}

inline LambdaCurve build_lambda_curve(const VMatrix& v, const AlphaGrid& grid,
                                      const SmoothingConfig& cfg = {}) {
    return build_lambda_curve_columns(
        [&v](std::size_t j) {
            std::vector<double> col(v.rows);
            for (std::size_t i = 0; i < v.rows; ++i) col[i] = v(i, j);
            return col;
        },
        grid, v.rows, cfg);
}

// Column-streaming variant for large populations: never materializes the
// full matrix.
inline LambdaCurve build_lambda_curve_streaming(const Dataset& ds, const PriorSpec& prior,
                                                const AlphaGrid& grid,
                                                const SmoothingConfig& cfg = {}) {
    std::vector<std::unique_ptr<TailProbFn>> tails(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        tails[i] = std::make_unique<TailProbFn>(ds.units[i], prior);
    return build_lambda_curve_columns(
        [&](std::size_t j) {
            const double theta = prior_upper_quantile(prior.theta_law, grid.nodes[j]);
            std::vector<double> col(ds.size());
            parallel_for(ds.size(), [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i)
                    col[i] = tails[i]->evaluate_at_theta(theta);
            });
            return col;
        },
        grid, ds.size(), cfg);
}

// ---------------------------------------------------------------------------
// Grid root solve

enum class RValueFlag { None, AtBoundaryTop, NoCrossing };

struct RValueResult {
    double rvalue = 1.0;
    double residual = 0.0;
    bool multiple_roots = false;
    RValueFlag flag = RValueFlag::None;
};

inline const char* rvalue_flag_name(RValueFlag f) {
    switch (f) {
        case RValueFlag::None: return "";
        case RValueFlag::AtBoundaryTop: return "at-boundary-top";
        case RValueFlag::NoCrossing: return "no-crossing";
    }
    return "";
}

// Smallest alpha in the grid range with V_alpha(D) >= lambda(alpha):
// sign scan over grid cells, then bisection inside the crossing cell.
// precomputed_row, when given, holds V at the grid nodes for this unit.
inline RValueResult solve_rvalue(const TailProbFn& tail, const LambdaCurve& lambda,
                                 std::span<const double> precomputed_row = {},
                                 double alpha_tol = 1e-6) {
    const std::vector<double>& grid = lambda.grid;
    const std::size_t J = grid.size();
    auto diff_at_node = [&](std::size_t j) {
        const double v =
            precomputed_row.empty() ? tail.evaluate(grid[j]) : precomputed_row[j];
        return v - lambda.smoothed[j];
    };
    auto diff = [&](double alpha) { return tail.evaluate(alpha) - lambda.evaluate(alpha); };

    RValueResult res;
    double d_prev = diff_at_node(0);
    if (d_prev >= 0.0) {
        res.rvalue = grid.front();
        res.residual = d_prev;
        res.flag = RValueFlag::AtBoundaryTop;
        return res;
    }

    bool found = false;
    bool above = false;  // currently in a V >= lambda stretch (after a root)
    for (std::size_t j = 1; j < J; ++j) {
        const double d = diff_at_node(j);
        if (!found && d >= 0.0) {
            const RootResult root =
                bisect_lower_boundary(diff, grid[j - 1], grid[j], alpha_tol);
            res.rvalue = root.x;
            res.residual = std::fabs(root.f);
            found = true;
            above = true;
        } else if (found) {
            if (above && d < 0.0) above = false;
            else if (!above && d >= 0.0) res.multiple_roots = true;  // re-crossing
        }
        d_prev = d;
    }
    if (!found) {
        res.rvalue = 1.0;
        res.residual = std::fabs(d_prev);
        res.flag = RValueFlag::NoCrossing;
    }
    return res;
}

// Full grid pipeline over a dataset; row-reuses the V matrix when provided.
inline std::vector<RValueResult> solve_rvalues(const Dataset& ds, const PriorSpec& prior,
                                               const LambdaCurve& lambda,
                                               const VMatrix* v = nullptr) {
    std::vector<RValueResult> out(ds.size());
    parallel_for(ds.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const TailProbFn tail(ds.units[i], prior);
            out[i] = solve_rvalue(tail, lambda,
                                  v ? v->row(i) : std::span<const double>{});
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Fixed quadrature nodes for E_g[h(sigma2)] under a variance law.
// Gamma laws use the exact substitution z = (r s)^k (removes the s^(k-1)
// endpoint singularity); inverse-gamma reduces to a gamma law in 1/s.

struct VarianceQuadrature {
    std::vector<double> s;  // sigma2 abscissas
    std::vector<double> w;  // weights summing to ~1

    template <class H>
    double mean(H&& h) const {
        double acc = 0.0;
        for (std::size_t q = 0; q < s.size(); ++q) acc += w[q] * h(s[q]);
        return acc;
    }
};

namespace detail {

// Composite 16-point Gauss-Legendre nodes on (0,1).
inline void gl16(double a, double b, std::vector<double>& xs, std::vector<double>& ws) {
    static constexpr double x[8] = {
        0.0950125098376374401853193, 0.2816035507792589132304605,
        0.4580167776572273863424194, 0.6178762444026437484466718,
        0.7554044083550030338951012, 0.8656312023878317438804679,
        0.9445750230732325760779884, 0.9894009349916499325961542};
    static constexpr double w[8] = {
        0.1894506104550684962853967, 0.1826034150449235888667637,
        0.1691565193950025381893121, 0.1495959888165767320815017,
        0.1246289712555338720524763, 0.0951585116824927848099251,
        0.0622535239386478928628438, 0.0271524594117540948517806};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int i = 0; i < 8; ++i) {
        xs.push_back(c - h * x[i]);
        ws.push_back(h * w[i]);
        xs.push_back(c + h * x[i]);
        ws.push_back(h * w[i]);
    }
}

// Nodes for E[h(T)], T ~ Gamma(shape k, rate r), via the substitution
// z = (rT/k)^k: the z-density k^(k-1) exp(-k z^(1/k)) / Gamma(k) has no
// endpoint singularity and keeps its mass near z = 1 for every shape.
// z maps to (0,1) by z = t/(1-t); segments come from adaptively refining
// the density itself, then each final segment contributes its GK15 nodes.
inline VarianceQuadrature gamma_law_nodes(double shape, double rate, int max_segments = 768) {
    const double lnorm = (shape - 1.0) * std::log(shape) - std::lgamma(shape);
    auto u_of_t = [&](double t) {
        const double z = t / (1.0 - t);
        return shape * std::pow(z, 1.0 / shape);  // u = r*s
    };
    auto density_t = [&](double t) {
        const double lw = lnorm - u_of_t(t);
        const double om = 1.0 - t;
        return lw < -745.0 ? 0.0 : std::exp(lw) / (om * om);
    };

    // start from a uniform 32-way split so the later Phi-modulated
    // integrands (not just the density) are resolved, then refine
    struct Seg { double a, b, value, error; };
    std::vector<Seg> segs;
    double total_err = 0.0;
    for (int p = 0; p < 32; ++p) {
        Seg s0{p / 32.0, (p + 1) / 32.0, 0.0, 0.0};
        gk15(density_t, s0.a, s0.b, s0.value, s0.error);
        total_err += s0.error;
        segs.push_back(s0);
    }
    while (total_err > 1e-14 && static_cast<int>(segs.size()) < max_segments) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        const Seg w = segs[worst];
        const double mid = 0.5 * (w.a + w.b);
        if (mid <= w.a || mid >= w.b) break;
        Seg l{w.a, mid, 0.0, 0.0}, r{mid, w.b, 0.0, 0.0};
        gk15(density_t, l.a, l.b, l.value, l.error);
        gk15(density_t, r.a, r.b, r.value, r.error);
        segs[worst] = l;
        segs.push_back(r);
        total_err += l.error + r.error - w.error;
    }

    VarianceQuadrature q;
    q.s.reserve(segs.size() * 15);
    q.w.reserve(segs.size() * 15);
    for (const Seg& g : segs) {
        const double c = 0.5 * (g.a + g.b), h = 0.5 * (g.b - g.a);
        for (int i = 0; i < 8; ++i) {
            for (const double sign : {-1.0, 1.0}) {
                if (i == 7 && sign > 0.0) continue;  // center node once
                const double t = c + sign * h * kGK15Nodes[i];
                const double w = h * kGK15WeightsK[i] * density_t(t);
                if (w <= 0.0) continue;
                q.s.push_back(u_of_t(t) / rate);
                q.w.push_back(w);
            }
        }
    }
    return q;
}

}  // namespace detail

inline VarianceQuadrature variance_law_nodes(const VarianceLaw& law) {
    VarianceQuadrature q;
    if (const auto* pm = std::get_if<PointMassVar>(&law)) {
        q.s = {pm->sigma2};
        q.w = {1.0};
        return q;
    }
    if (const auto* ev = std::get_if<EmpiricalVar>(&law)) {
        q.s = ev->draws;
        q.w.assign(ev->draws.size(), 1.0 / static_cast<double>(ev->draws.size()));
        return q;
    }
    if (const auto* gv = std::get_if<GammaVar>(&law)) {
        q = detail::gamma_law_nodes(gv->shape, gv->rate);
    } else {
        const auto& iv = std::get<InvGammaVar>(law);
        // 1/s ~ Gamma(shape, rate=scale)
        q = detail::gamma_law_nodes(iv.shape, iv.scale);
        for (double& s : q.s) s = 1.0 / s;
    }
    double total = 0.0;
    for (double w : q.w) total += w;
    if (std::fabs(total - 1.0) > 1e-8)
        throw QuadratureFailure("variance_law_nodes: weights sum to " + std::to_string(total));
    for (double& w : q.w) w /= total;  // exact normalization
    return q;
}

// Variance law of c * sigma2 given the law of sigma2 (used to move laws
// onto the standardized scale s' = sigma2 / tau2).
inline VarianceLaw scale_variance_law(const VarianceLaw& law, double c) {
    if (const auto* gv = std::get_if<GammaVar>(&law)) return GammaVar{gv->shape, gv->rate / c};
    if (const auto* iv = std::get_if<InvGammaVar>(&law))
        return InvGammaVar{iv->shape, iv->scale * c};
    if (const auto* pm = std::get_if<PointMassVar>(&law)) return PointMassVar{pm->sigma2 * c};
    EmpiricalVar ev = std::get<EmpiricalVar>(law);
    for (double& d : ev.draws) d *= c;
    return ev;
}

// ---------------------------------------------------------------------------
// Closed-form normal/normal engine

class ClosedFormRValue {
public:
    // prior and variance law on the ORIGINAL scale; computations run on
    // the standardized (mu=0, tau2=1) scale internally.
    ClosedFormRValue(const NormalPrior& prior, const VarianceLaw& variance_law)
        : mu_(prior.mu), tau_(std::sqrt(prior.tau2)) {
        if (!(prior.tau2 > 0.0))
            throw NumericError("DegenerateData", "closed form needs tau2 > 0");
        const VarianceLaw std_law = scale_variance_law(variance_law, 1.0 / prior.tau2);
        quad_ = variance_law_nodes(std_law);
        point_mass_ = std::get_if<PointMassVar>(&std_law) != nullptr;
        if (point_mass_) pm_s_ = std::get<PointMassVar>(std_law).sigma2;
        if (!point_mass_) build_u_table();
    }

    // u_alpha for the max-agreement family, standardized scale.
    double u_alpha(double alpha) const { return u_of_theta(norm_quantile(1.0 - alpha)); }

    // lambda_alpha implied by the closed form: V at the threshold.
    double lambda_alpha(double alpha) const { return norm_cdf(-u_alpha(alpha)); }

    // t*_alpha(sigma2) on the standardized scale.
    double threshold_std(double alpha, double s) const {
        const double theta = norm_quantile(1.0 - alpha);
        return threshold_from_theta(theta, s);
    }

    // t*_alpha(sigma2) on the original scale.
    double threshold(double alpha, double sigma2) const {
        return mu_ + tau_ * threshold_std(alpha, sigma2 / (tau_ * tau_));
    }

    // r-value of a unit on the original scale. Monotone decreasing in x.
    double rvalue(double x, double sigma2) const {
        const double xs = (x - mu_) / tau_;
        const double s = sigma2 / (tau_ * tau_);
        // solve threshold_from_theta(theta, s) = xs; increasing in theta
        double lo = kThetaMin, hi = kThetaMax;
        if (threshold_from_theta(lo, s) >= xs) return std::min(1.0, norm_sf(lo));
        if (threshold_from_theta(hi, s) <= xs) return norm_sf(hi);
        for (int it = 0; it < 70; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (threshold_from_theta(mid, s) < xs) lo = mid;
            else hi = mid;
            if (hi - lo < 2e-10) break;
        }
        return std::min(1.0, norm_sf(0.5 * (lo + hi)));
    }

private:
    static constexpr double kThetaMin = -8.6, kThetaMax = 8.6, kThetaStep = 2e-3;

    double threshold_from_theta(double theta, double s) const {
        return theta * (s + 1.0) - u_of_theta(theta) * std::sqrt(s * (s + 1.0));
    }

    // Solves E_g[Phi(theta*sqrt(1+s) - u*sqrt(s))] = Phi(theta) for u.
    // Worked in log space on the smaller tail so extreme theta (survival
    // probabilities near 1e-18) keep full relative precision.
    double solve_u(double theta) const {
        const bool upper = theta >= 0.0;  // compare survival side when theta >= 0
        const double log_target = std::log(upper ? norm_sf(theta) : norm_cdf(theta));
        auto f = [&](double u) {
            const double mean = quad_.mean([&](double s) {
                const double arg = theta * std::sqrt(1.0 + s) - u * std::sqrt(s);
                return upper ? norm_sf(arg) : norm_cdf(arg);
            });
            return (std::log(std::max(mean, 1e-300)) - log_target) * (upper ? 1.0 : -1.0);
        };
        auto [lo, hi] = expand_bracket(f, -12.0, 12.0);
        const RootResult r = brent(f, lo, hi, 1e-11);
        if (!r.bracketed) throw NumericError("NoBracket", "u_alpha solve lost its bracket");
        return r.x;
    }

    void build_u_table() {
        const std::size_t n =
            static_cast<std::size_t>(std::round((kThetaMax - kThetaMin) / kThetaStep)) + 1;
        u_table_.resize(n);
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                u_table_[i] = solve_u(kThetaMin + static_cast<double>(i) * kThetaStep);
        }, 64);
    }

    // Catmull-Rom interpolation of the u table; analytic for point mass.
    double u_of_theta(double theta) const {
        if (point_mass_) {
            if (pm_s_ <= 0.0) return 0.0;
            return theta * (std::sqrt(pm_s_ + 1.0) - 1.0) / std::sqrt(pm_s_);
        }
        const double pos =
            std::clamp((theta - kThetaMin) / kThetaStep, 1.0,
                       static_cast<double>(u_table_.size() - 3));
        const std::size_t i = static_cast<std::size_t>(pos);
        const double t = pos - static_cast<double>(i);
        const double p0 = u_table_[i - 1], p1 = u_table_[i], p2 = u_table_[i + 1],
                     p3 = u_table_[i + 2];
        return p1 + 0.5 * t * (p2 - p0 +
                               t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                    t * (3.0 * (p1 - p2) + p3 - p0)));
    }

    double mu_, tau_;
    VarianceQuadrature quad_;
    bool point_mass_ = false;
    double pm_s_ = 1.0;
    std::vector<double> u_table_;
};

}  // namespace rankval
