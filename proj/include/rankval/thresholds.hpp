#pragma once

// Baseline ranking criteria for the normal/normal model and their
// threshold-function families on the standardized (mu=0, tau2=1) scale,
// including the numeric solve of each family's size constant u_alpha.
// General-scale thresholds are mu + tau * t_alpha(sigma2/tau2).

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/math/roots.hpp"
#include "rankval/math/special.hpp"
#include "rankval/model.hpp"
#include "rankval/tail_prob.hpp"

namespace rankval {

enum class ThresholdMethod { Mle, Pv0, Pvc, Pm, Per, Bf, MaxAgree };

inline const char* threshold_method_name(ThresholdMethod m) {
    switch (m) {
        case ThresholdMethod::Mle: return "mle";
        case ThresholdMethod::Pv0: return "pv0";
        case ThresholdMethod::Pvc: return "pvc";
        case ThresholdMethod::Pm: return "pm";
        case ThresholdMethod::Per: return "per";
        case ThresholdMethod::Bf: return "bf";
        case ThresholdMethod::MaxAgree: return "maxagree";
    }
    return "?";
}

// t_alpha(sigma2) given the family's size constant u (standardized scale).
// theta_alpha enters only for the max-agreement family; c only for Pvc.
inline double threshold_value(ThresholdMethod m, double u, double s, double theta_alpha,
                              double c = 0.0) {
    switch (m) {
        case ThresholdMethod::Mle: return u;
        case ThresholdMethod::Pv0: return u * std::sqrt(s);
        case ThresholdMethod::Pvc: return c + u * std::sqrt(s);
        case ThresholdMethod::Pm: return u * (s + 1.0);
        case ThresholdMethod::Per: return u * std::sqrt((s + 1.0) * (2.0 * s + 1.0));
        case ThresholdMethod::Bf: {
            const double body = u + std::log((s + 1.0) / s);
            return std::sqrt(s * (s + 1.0) * std::max(body, 0.0));
        }
        case ThresholdMethod::MaxAgree:
            return theta_alpha * (s + 1.0) - u * std::sqrt(s * (s + 1.0));
    }
    return 0.0;
}

// P(X >= t_alpha(s) | sigma2 = s) with X | s ~ N(0, 1+s) marginally.
inline double conditional_exceedance(ThresholdMethod m, double u, double s, double theta_alpha,
                                     double c = 0.0) {
    return norm_sf(threshold_value(m, u, s, theta_alpha, c) / std::sqrt(1.0 + s));
}

// Size constant u_alpha: the u making the variance-law average of the
// conditional exceedance equal alpha. Residual < 1e-8.
inline double solve_u_alpha(ThresholdMethod m, double alpha, const VarianceLaw& law,
                            double c = 0.0, double quad_abstol = 1e-10) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("solve_u_alpha: alpha must be in (0,1)");
    if (m == ThresholdMethod::Bf && alpha >= 0.5)
        throw NumericError("NoBracket",
                           "bf family selects at most half the units; alpha must be < 0.5");
    const double theta_alpha = norm_quantile(1.0 - alpha);
    auto size_gap = [&](double u) {
        return variance_law_mean(
                   law, [&](double s) { return conditional_exceedance(m, u, s, theta_alpha, c); },
                   quad_abstol) -
               alpha;
    };
    auto [lo, hi] = expand_bracket(size_gap, -12.0, 12.0);
    const RootResult r = brent(size_gap, lo, hi, 1e-12);
    if (!r.bracketed)
        throw NumericError("NoBracket", std::string("u_alpha bracket lost for family ") +
                                            threshold_method_name(m));
    if (std::fabs(r.f) > 1e-8)
        throw NumericError("NonConvergence",
                           std::string("u_alpha residual too large for family ") +
                               threshold_method_name(m));
    return r.x;
}

// One ranking family with its solved size constant; caches u per alpha.
class ThresholdFamily {
public:
    ThresholdFamily(ThresholdMethod method, VarianceLaw law, double benchmark_c = 0.0)
        : method_(method), law_(std::move(law)), c_(benchmark_c) {}

    ThresholdMethod method() const { return method_; }

    double u(double alpha) const {
        for (const auto& [a, uv] : cache_)
            if (a == alpha) return uv;
        const double uv = solve_u_alpha(method_, alpha, law_, c_);
        cache_.emplace_back(alpha, uv);
        return uv;
    }

    double threshold(double alpha, double s) const {
        return threshold_value(method_, u(alpha), s, norm_quantile(1.0 - alpha), c_);
    }

    // Marginal exceedance at the solved u; equals alpha up to tolerance.
    double size(double alpha) const {
        const double uu = u(alpha);
        const double theta_alpha = norm_quantile(1.0 - alpha);
        return variance_law_mean(
            law_, [&](double s) { return conditional_exceedance(method_, uu, s, theta_alpha, c_); });
    }

private:
    ThresholdMethod method_;
    VarianceLaw law_;
    double c_;
    mutable std::vector<std::pair<double, double>> cache_;
};

struct ThresholdCurvePoint {
    ThresholdMethod method;
    double alpha, sigma2, threshold;
};

inline std::vector<ThresholdCurvePoint> threshold_curves(
    const std::vector<ThresholdMethod>& methods, const std::vector<double>& alphas,
    const std::vector<double>& sigma2_grid, const VarianceLaw& law, double benchmark_c = 0.0) {
    std::vector<ThresholdCurvePoint> out;
    out.reserve(methods.size() * alphas.size() * sigma2_grid.size());
    for (const ThresholdMethod m : methods) {
        ThresholdFamily fam(m, law, benchmark_c);
        for (const double a : alphas) {
            const double u = fam.u(a);
            const double theta_alpha = norm_quantile(1.0 - a);
            for (const double s : sigma2_grid)
                out.push_back({m, a, s, threshold_value(m, u, s, theta_alpha, benchmark_c)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ranking variables (Table-1 column for the normal model; conjugate/draws
// analogues elsewhere)

enum class Method { RValue, Mle, PValue, Pm, Per, Bf };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::RValue: return "rvalue";
        case Method::Mle: return "mle";
        case Method::PValue: return "pvalue";
        case Method::Pm: return "pm";
        case Method::Per: return "per";
        case Method::Bf: return "log_bf";
    }
    return "?";
}

// true: smaller values rank higher (rank 1 = smallest); false: larger wins.
inline bool smaller_is_better(Method m) {
    switch (m) {
        case Method::RValue:
        case Method::PValue:
        case Method::Per: return true;
        case Method::Mle:
        case Method::Pm:
        case Method::Bf: return false;
    }
    return false;
}

// PER on the standardized normal scale: P(theta_i <= theta | x, s) with an
// independent generic theta ~ N(0,1).
inline double per_normal(double x_std, double s) {
    const double m = x_std / (s + 1.0);
    const double v = s / (s + 1.0);
    return norm_sf(m / std::sqrt(1.0 + v));
}

// The ranking variable for one unit. r-values are produced by the engine,
// not here. benchmark_c is the Pvc null on the original scale.
inline double ranking_variable(Method m, const UnitRecord& unit, const PriorSpec& prior,
                               double benchmark_c = 0.0) {
    switch (unit.kind()) {
        case PayloadKind::Normal: {
            const auto& o = unit.normal();
            const auto& np = std::get<NormalPrior>(prior.theta_law);
            const double tau = std::sqrt(np.tau2);
            const double xs = (o.x - np.mu) / tau;
            const double s = o.sigma2 / np.tau2;
            switch (m) {
                case Method::Mle: return o.x;
                case Method::PValue: return norm_sf((o.x - benchmark_c) / std::sqrt(o.sigma2));
                case Method::Pm: return posterior_mean(unit, prior);
                case Method::Per: return per_normal(xs, s);
                case Method::Bf: {
                    if (xs <= 0.0) return -std::numeric_limits<double>::infinity();
                    return 0.5 * std::log(s / (s + 1.0)) + xs * xs / (2.0 * s * (s + 1.0));
                }
                case Method::RValue: break;
            }
            break;
        }
        case PayloadKind::Binomial: {
            const auto& o = unit.binomial();
            switch (m) {
                case Method::Mle:
                    return static_cast<double>(o.y) / static_cast<double>(o.n);
                case Method::Pm: return posterior_mean(unit, prior);
                case Method::Per: return per_integral(TailProbFn(unit, prior));
                case Method::PValue:
                case Method::Bf:
                    throw NumericError("BFUndefined",
                                       std::string(method_name(m)) +
                                           " is defined for the normal model only");
                case Method::RValue: break;
            }
            break;
        }
        case PayloadKind::Draws: {
            switch (m) {
                case Method::Pm: return posterior_mean(unit, prior);
                case Method::Per: return per_integral(TailProbFn(unit, prior));
                case Method::Mle:
                case Method::PValue:
                case Method::Bf:
                    throw NumericError("BFUndefined",
                                       std::string(method_name(m)) +
                                           " is not defined for the draws model");
                case Method::RValue: break;
            }
            break;
        }
    }
    throw UsageError("ranking_variable: r-values come from the rvalue engine");
}

}  // namespace rankval
