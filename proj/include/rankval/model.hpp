#pragma once

// Domain types shared by every module: unit records, datasets, priors and
// variance laws. Types are immutable after construction and safe to share
// across threads; all algorithms live elsewhere.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/math/quadrature.hpp"
#include "rankval/math/quantiles.hpp"
#include "rankval/math/special.hpp"
#include "rankval/rng.hpp"

namespace rankval {

// ---------------------------------------------------------------------------
// Unit records

struct NormalObs {
    double x = 0.0;
    double sigma2 = 1.0;
};

struct BinomialObs {
    long y = 0;
    long n = 1;
};

struct PosteriorDraws {
    std::vector<double> draws;
};

enum class PayloadKind { Normal, Binomial, Draws };

inline const char* payload_kind_name(PayloadKind k) {
    switch (k) {
        case PayloadKind::Normal: return "normal";
        case PayloadKind::Binomial: return "binomial";
        case PayloadKind::Draws: return "draws";
    }
    return "?";
}

struct UnitRecord {
    std::string id;
    std::variant<NormalObs, BinomialObs, PosteriorDraws> payload;

    PayloadKind kind() const { return static_cast<PayloadKind>(payload.index()); }
    const NormalObs& normal() const { return std::get<NormalObs>(payload); }
    const BinomialObs& binomial() const { return std::get<BinomialObs>(payload); }
    const PosteriorDraws& draws() const { return std::get<PosteriorDraws>(payload); }
};

// A validated, kind-homogeneous collection of units.
struct Dataset {
    PayloadKind kind = PayloadKind::Normal;
    std::vector<UnitRecord> units;
    std::vector<std::string> warnings;

    std::size_t size() const { return units.size(); }
};

struct ValidateOptions {
    std::size_t draws_floor = 100;  // below this: warning, not error
};

// Checks per-unit invariants and kind homogeneity. Throws DataError with
// every violation listed; warnings (e.g. short draw vectors) are collected
// on the returned dataset. Idempotent.
inline Dataset validate_dataset(std::vector<UnitRecord> units,
                                const ValidateOptions& opt = {}) {
    if (units.empty()) throw DataError("EmptyDataset", "dataset has no units");
    Dataset ds;
    ds.kind = units.front().kind();
    std::string problems;
    auto complain = [&problems](const std::string& id, const std::string& what) {
        if (!problems.empty()) problems += "; ";
        problems += id + ": " + what;
    };
    for (const UnitRecord& u : units) {
        if (u.id.empty()) complain("<anonymous>", "empty unit id");
        if (u.kind() != ds.kind) {
            throw DataError("MixedPayloadKinds",
                            "unit '" + u.id + "' has kind " + payload_kind_name(u.kind()) +
                                ", dataset started with " + payload_kind_name(ds.kind));
        }
        switch (u.kind()) {
            case PayloadKind::Normal: {
                const NormalObs& o = u.normal();
                if (!std::isfinite(o.x)) complain(u.id, "x not finite");
                if (!(o.sigma2 > 0.0) || !std::isfinite(o.sigma2))
                    complain(u.id, "sigma2 must be positive and finite");
                break;
            }
            case PayloadKind::Binomial: {
                const BinomialObs& o = u.binomial();
                if (o.n < 1) complain(u.id, "n must be >= 1");
                if (o.y < 0 || o.y > o.n) complain(u.id, "y must satisfy 0 <= y <= n");
                break;
            }
            case PayloadKind::Draws: {
                const PosteriorDraws& o = u.draws();
                if (o.draws.empty()) {
                    complain(u.id, "no posterior draws");
                    break;
                }
                for (double d : o.draws)
                    if (!std::isfinite(d)) {
                        complain(u.id, "non-finite posterior draw");
                        break;
                    }
                if (o.draws.size() < opt.draws_floor)
                    ds.warnings.push_back("unit '" + u.id + "' has only " +
                                          std::to_string(o.draws.size()) +
                                          " posterior draws (floor " +
                                          std::to_string(opt.draws_floor) + ")");
                break;
            }
        }
    }
    if (!problems.empty()) throw DataError("InvalidUnit", problems);
    ds.units = std::move(units);
    return ds;
}

// ---------------------------------------------------------------------------
// Priors

struct NormalPrior {
    double mu = 0.0;
    double tau2 = 1.0;
};

struct BetaPrior {
    double a = 1.0;
    double b = 1.0;
};

struct EmpiricalPrior {
    std::vector<double> sorted_draws;  // ascending
};

struct GammaVar {
    double shape = 1.0;
    double rate = 1.0;  // mean = shape/rate
};

struct InvGammaVar {
    double shape = 2.0;
    double scale = 1.0;  // mean = scale/(shape-1) for shape > 1
};

struct PointMassVar {
    double sigma2 = 1.0;
};

struct EmpiricalVar {
    std::vector<double> draws;
};

using ThetaLaw = std::variant<NormalPrior, BetaPrior, EmpiricalPrior>;
using VarianceLaw = std::variant<GammaVar, InvGammaVar, PointMassVar, EmpiricalVar>;

struct FitDiagnostics {
    double log_likelihood = 0.0;
    bool converged = true;
    bool boundary = false;   // tau2 clamped at 0, or degenerate data
    int iterations = 0;
    double grad_norm = 0.0;
    std::vector<double> param_se;  // from inverse Hessian, diagnostics only
    std::vector<std::string> notes;
};

struct PriorSpec {
    ThetaLaw theta_law;
    std::optional<VarianceLaw> variance_law;
    FitDiagnostics diag;
};

struct ThetaQuantile {
    double alpha = 0.5;
    double theta_alpha = 0.0;
};

// Upper-alpha quantile of the prior: P(theta >= theta_alpha) = alpha.
inline double prior_upper_quantile(const ThetaLaw& law, double alpha) {
    if (!(alpha > 0.0) && alpha != 0.0) throw std::domain_error("alpha out of range");
    if (const auto* np = std::get_if<NormalPrior>(&law)) {
        return np->mu + std::sqrt(np->tau2) * norm_quantile(1.0 - alpha);
    }
    if (const auto* bp = std::get_if<BetaPrior>(&law)) {
        return inc_beta_inv(bp->a, bp->b, 1.0 - alpha);
    }
    const auto& ep = std::get<EmpiricalPrior>(law);
    return quantile_sorted(ep.sorted_draws, 1.0 - alpha, QuantileRule::Midpoint);
}

// Prior cdf F(t) = P(theta <= t).
inline double prior_cdf(const ThetaLaw& law, double t) {
    if (const auto* np = std::get_if<NormalPrior>(&law)) {
        if (np->tau2 <= 0.0) return t < np->mu ? 0.0 : 1.0;
        return norm_cdf((t - np->mu) / std::sqrt(np->tau2));
    }
    if (const auto* bp = std::get_if<BetaPrior>(&law)) {
        return inc_beta(bp->a, bp->b, t);
    }
    const auto& d = std::get<EmpiricalPrior>(law).sorted_draws;
    const auto it = std::upper_bound(d.begin(), d.end(), t);
    return static_cast<double>(it - d.begin()) / static_cast<double>(d.size());
}

// ---------------------------------------------------------------------------
// Variance-law functionals

namespace detail {

// E[h(T)] for T ~ Gamma(shape k, rate r) by adaptive Gauss-Kronrod after
// the exact substitution z = (rT/k)^k. It removes the s^(k-1) endpoint
// singularity (shapes below 1 occur for high-CV variance laws) and keeps
// the mass near z = 1 for every shape; z maps to (0,1) by z = u/(1-u).
// The z-density is k^(k-1) exp(-k z^(1/k)) / Gamma(k).
template <class H>
double gamma_law_mean_gk(double shape, double rate, H&& h, double abstol) {
    const double lnorm = (shape - 1.0) * std::log(shape) - std::lgamma(shape);
    return integrate_half_line(
               [&](double z) {
                   const double u = shape * std::pow(z, 1.0 / shape);  // u = r*s
                   const double lw = lnorm - u;
                   return lw < -745.0 ? 0.0 : h(u / rate) * std::exp(lw);
               },
               abstol)
        .value;
}

}  // namespace detail

// E_g[h(sigma2)], with the quadrature scheme the law calls for.
template <class H>
double variance_law_mean(const VarianceLaw& law, H&& h, double abstol = 1e-10) {
    if (const auto* pm = std::get_if<PointMassVar>(&law)) {
        return h(pm->sigma2);
    }
    if (const auto* ev = std::get_if<EmpiricalVar>(&law)) {
        double acc = 0.0;
        for (double s : ev->draws) acc += h(s);
        return acc / static_cast<double>(ev->draws.size());
    }
    if (const auto* gv = std::get_if<GammaVar>(&law)) {
        return detail::gamma_law_mean_gk(gv->shape, gv->rate, h, abstol);
    }
    const auto& iv = std::get<InvGammaVar>(law);
    // 1/sigma2 ~ Gamma(shape, rate = scale)
    return detail::gamma_law_mean_gk(iv.shape, iv.scale,
                                     [&h](double t) { return h(1.0 / t); }, abstol);
}

inline double variance_law_draw(const VarianceLaw& law, RngStream& rng) {
    if (const auto* pm = std::get_if<PointMassVar>(&law)) return pm->sigma2;
    if (const auto* gv = std::get_if<GammaVar>(&law)) return rng.gamma(gv->shape, gv->rate);
    if (const auto* iv = std::get_if<InvGammaVar>(&law)) return rng.inv_gamma(iv->shape, iv->scale);
    const auto& ev = std::get<EmpiricalVar>(law);
    return ev.draws[rng.uniform_int(0, ev.draws.size() - 1)];
}

}  // namespace rankval
