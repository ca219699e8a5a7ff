#pragma once

// Empirical-Bayes prior estimation by marginal maximum likelihood.
// Quasi-Newton in unconstrained log-parameter space, method-of-moments
// starts, analytic gradients. All fits are deterministic given the data.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/math/optimize.hpp"
#include "rankval/math/special.hpp"
#include "rankval/model.hpp"

namespace rankval {

namespace detail {

inline double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// 2x2 symmetric inverse -> sqrt of diagonal; returns empty on a singular
// or non-positive Hessian. Diagnostics only.
inline std::vector<double> se_from_neg_hessian(double h00, double h01, double h11) {
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !(h00 > 0.0)) return {};
    const double v0 = h11 / det, v1 = h00 / det;
    if (!(v0 > 0.0) || !(v1 > 0.0)) return {};
    return {std::sqrt(v0), std::sqrt(v1)};
}

}  // namespace detail

struct FitOptions {
    double grad_tol = 1e-8;
    int max_iter = 500;
};

// ---------------------------------------------------------------------------
// Beta-binomial marginal ML

// log L(a,b) = sum_i [ log C(n_i,y_i) + lB(a+y_i, b+n_i-y_i) - lB(a,b) ]
inline double beta_binomial_loglik(std::span<const UnitRecord> units, double a, double b) {
    double ll = 0.0;
    const double lb_ab = log_beta(a, b);
    for (const auto& u : units) {
        const auto& o = u.binomial();
        ll += detail::log_choose(static_cast<double>(o.n), static_cast<double>(o.y)) +
              log_beta(a + static_cast<double>(o.y), b + static_cast<double>(o.n - o.y)) - lb_ab;
    }
    return ll;
}

inline PriorSpec fit_beta_binomial(const Dataset& ds, const FitOptions& opt = {}) {
    if (ds.kind != PayloadKind::Binomial)
        throw UsageError("fit_beta_binomial: dataset is not binomial");
    if (ds.size() < 2) throw DataError("DegenerateData", "need at least 2 units");
    bool any_success = false, any_failure = false;
    for (const auto& u : ds.units) {
        if (u.binomial().y > 0) any_success = true;
        if (u.binomial().y < u.binomial().n) any_failure = true;
    }
    if (!any_success || !any_failure)
        throw DataError("DegenerateData", "all-zero or all-perfect binomial data");

    // method-of-moments start
    const std::size_t n_units = ds.size();
    double pbar = 0.0, inv_n = 0.0;
    std::vector<double> phat(n_units);
    for (std::size_t i = 0; i < n_units; ++i) {
        const auto& o = ds.units[i].binomial();
        phat[i] = static_cast<double>(o.y) / static_cast<double>(o.n);
        pbar += phat[i];
        inv_n += 1.0 / static_cast<double>(o.n);
    }
    pbar /= static_cast<double>(n_units);
    inv_n /= static_cast<double>(n_units);
    double pvar = 0.0;
    for (double p : phat) pvar += (p - pbar) * (p - pbar);
    pvar /= static_cast<double>(n_units);
    double nu = 50.0;
    const double ratio = pvar / std::max(pbar * (1.0 - pbar), 1e-12);
    if (ratio > inv_n && inv_n < 1.0) {
        nu = std::clamp((1.0 - inv_n) / (ratio - inv_n) - 1.0, 0.1, 1e5);
    }
    const double a0 = std::clamp(pbar * nu, 1e-3, 1e6);
    const double b0 = std::clamp((1.0 - pbar) * nu, 1e-3, 1e6);

    auto neg_ll = [&](const std::vector<double>& t) {
        return -beta_binomial_loglik(ds.units, std::exp(t[0]), std::exp(t[1]));
    };
    auto neg_grad = [&](const std::vector<double>& t, std::vector<double>& g) {
        const double a = std::exp(t[0]), b = std::exp(t[1]);
        double da = 0.0, db = 0.0;
        const double psi_a = digamma(a), psi_b = digamma(b), psi_ab = digamma(a + b);
        for (const auto& u : ds.units) {
            const auto& o = u.binomial();
            const double y = static_cast<double>(o.y), n = static_cast<double>(o.n);
            const double psi_abn = digamma(a + b + n);
            da += digamma(a + y) - psi_abn - psi_a + psi_ab;
            db += digamma(b + n - y) - psi_abn - psi_b + psi_ab;
        }
        g[0] = -da * a;  // chain rule to log-space
        g[1] = -db * b;
    };

    // damped Newton on the analytic gradient from the method-of-moments
    // start; the BFGS line search drags through hundreds of iterations on
    // this strongly curved 2-d surface, Newton lands in a handful
    OptimResult start;
    start.x = {std::log(a0), std::log(b0)};
    start.f = neg_ll(start.x);
    OptimResult r = newton_polish_2d(neg_grad, start, opt.grad_tol, 60);
    if (!r.converged) {
        r = newton_polish_2d(
            neg_grad,
            bfgs_minimize(neg_ll, neg_grad, r.x, std::max(1e-5, opt.grad_tol),
                          opt.max_iter),
            opt.grad_tol, 20);
    }
    const double a_hat = std::exp(r.x[0]), b_hat = std::exp(r.x[1]);

    PriorSpec prior;
    prior.theta_law = BetaPrior{a_hat, b_hat};
    prior.diag.log_likelihood = beta_binomial_loglik(ds.units, a_hat, b_hat);
    prior.diag.converged = r.converged;
    prior.diag.iterations = r.iterations;
    prior.diag.grad_norm = r.grad_norm;
    if (a_hat + b_hat > 1e6) {
        // under-dispersed data: the marginal likelihood increases toward
        // the pure-binomial boundary a+b -> infinity
        prior.diag.boundary = true;
        prior.diag.notes.push_back("dispersion boundary: a+b ran to the binomial limit");
    }
    if (!r.converged && !prior.diag.boundary)
        prior.diag.notes.push_back("NonConvergence: best point reported after " +
                                   std::to_string(r.iterations) + " iterations");
    {
        // numeric Hessian of -loglik in (log a, log b) from the analytic gradient
        const double h = 1e-5;
        std::vector<double> gp(2), gm(2);
        std::vector<double> xp = r.x, xm = r.x;
        xp[0] += h; xm[0] -= h;
        neg_grad(xp, gp); neg_grad(xm, gm);
        const double h00 = (gp[0] - gm[0]) / (2 * h), h01a = (gp[1] - gm[1]) / (2 * h);
        xp = r.x; xm = r.x;
        xp[1] += h; xm[1] -= h;
        neg_grad(xp, gp); neg_grad(xm, gm);
        const double h11 = (gp[1] - gm[1]) / (2 * h), h01b = (gp[0] - gm[0]) / (2 * h);
        prior.diag.param_se = detail::se_from_neg_hessian(h00, 0.5 * (h01a + h01b), h11);
    }
    return prior;
}

// ---------------------------------------------------------------------------
// Normal-normal marginal ML: X_i ~ N(mu, tau2 + sigma2_i)

inline double normal_normal_loglik(std::span<const UnitRecord> units, double mu, double tau2) {
    constexpr double log2pi = 1.8378770664093454836;
    double ll = 0.0;
    for (const auto& u : units) {
        const auto& o = u.normal();
        const double w = tau2 + o.sigma2;
        const double d = o.x - mu;
        ll += -0.5 * (log2pi + std::log(w) + d * d / w);
    }
    return ll;
}

inline PriorSpec fit_normal_normal(const Dataset& ds, const FitOptions& opt = {}) {
    if (ds.kind != PayloadKind::Normal)
        throw UsageError("fit_normal_normal: dataset is not normal");
    if (ds.size() < 2) throw DataError("DegenerateData", "need at least 2 units");

    const std::size_t n = ds.size();
    double mean_x = 0.0, mean_s2 = 0.0;
    for (const auto& u : ds.units) {
        mean_x += u.normal().x;
        mean_s2 += u.normal().sigma2;
    }
    mean_x /= static_cast<double>(n);
    mean_s2 /= static_cast<double>(n);
    double var_x = 0.0;
    for (const auto& u : ds.units) {
        const double d = u.normal().x - mean_x;
        var_x += d * d;
    }
    var_x /= static_cast<double>(n);

    PriorSpec prior;
    if (var_x == 0.0) {
        // all x identical: tau2 pinned at zero
        prior.theta_law = NormalPrior{mean_x, 0.0};
        prior.diag.log_likelihood = normal_normal_loglik(ds.units, mean_x, 0.0);
        prior.diag.boundary = true;
        prior.diag.notes.push_back("DegenerateData: all x identical, tau2 = 0");
        return prior;
    }

    const double tau2_start = std::max(var_x - mean_s2, 0.05 * var_x);
    auto neg_ll = [&](const std::vector<double>& t) {
        return -normal_normal_loglik(ds.units, t[0], std::exp(t[1]));
    };
    auto neg_grad = [&](const std::vector<double>& t, std::vector<double>& g) {
        const double mu = t[0], tau2 = std::exp(t[1]);
        double dmu = 0.0, dt2 = 0.0;
        for (const auto& u : ds.units) {
            const auto& o = u.normal();
            const double w = tau2 + o.sigma2;
            const double d = o.x - mu;
            dmu += d / w;
            dt2 += 0.5 * (d * d / (w * w) - 1.0 / w);
        }
        g[0] = -dmu;
        g[1] = -dt2 * tau2;
    };

    OptimResult r = newton_polish_2d(
        neg_grad,
        bfgs_minimize(neg_ll, neg_grad, {mean_x, std::log(tau2_start)},
                      std::max(1e-5, opt.grad_tol), opt.max_iter),
        opt.grad_tol, 20);
    double mu_hat = r.x[0], tau2_hat = std::exp(r.x[1]);
    bool boundary = false;

    // In log space a tau2 -> 0 optimum shows up as an endless slide; detect
    // it, clamp and flag. The marginal likelihood at tau2 = 0 is proper as
    // long as some sigma2 > 0.
    if (tau2_hat < 1e-10 * var_x || (!r.converged && tau2_hat < 1e-6 * var_x)) {
        double wsum = 0.0, mu_num = 0.0;
        bool all_zero_s2 = true;
        for (const auto& u : ds.units) {
            if (u.normal().sigma2 > 0.0) all_zero_s2 = false;
        }
        if (!all_zero_s2) {
            for (const auto& u : ds.units) {
                const double w = 1.0 / std::max(u.normal().sigma2, 1e-300);
                wsum += w;
                mu_num += w * u.normal().x;
            }
            const double mu0 = mu_num / wsum;
            if (normal_normal_loglik(ds.units, mu0, 0.0) >=
                normal_normal_loglik(ds.units, mu_hat, tau2_hat)) {
                mu_hat = mu0;
                tau2_hat = 0.0;
                boundary = true;
            }
        }
    }

    prior.theta_law = NormalPrior{mu_hat, tau2_hat};
    prior.diag.log_likelihood = normal_normal_loglik(ds.units, mu_hat, tau2_hat);
    prior.diag.converged = r.converged || boundary;
    prior.diag.boundary = boundary;
    prior.diag.iterations = r.iterations;
    prior.diag.grad_norm = r.grad_norm;
    if (boundary) prior.diag.notes.push_back("tau2 clamped at 0 (boundary optimum)");
    {
        const double h = 1e-5;
        std::vector<double> gp(2), gm(2), xp = r.x, xm = r.x;
        xp[0] += h; xm[0] -= h;
        neg_grad(xp, gp); neg_grad(xm, gm);
        const double h00 = (gp[0] - gm[0]) / (2 * h);
        xp = r.x; xm = r.x;
        xp[1] += h; xm[1] -= h;
        neg_grad(xp, gp); neg_grad(xm, gm);
        const double h11 = (gp[1] - gm[1]) / (2 * h);
        const double h01 = (gp[0] - gm[0]) / (2 * h);
        prior.diag.param_se = detail::se_from_neg_hessian(h00, h01, h11);
    }
    return prior;
}

// ---------------------------------------------------------------------------
// Variance-law ML on observed sigma2 values

enum class VarianceFamily { Gamma, InvGamma };

namespace detail {

// Solves log(k) - digamma(k) = target (target > 0) by Newton.
inline double solve_log_minus_digamma(double target) {
    // classic closed-form start
    double k = target < 0.5 ? (0.5 / target)
                            : (3.0 - target + std::sqrt((target - 3.0) * (target - 3.0) + 24.0 * target)) /
                                  (12.0 * target);
    k = std::clamp(k, 1e-8, 1e12);
    for (int it = 0; it < 100; ++it) {
        const double f = std::log(k) - digamma(k) - target;
        const double fp = 1.0 / k - trigamma(k);
        double step = f / fp;
        double k_new = k - step;
        if (!(k_new > 0.0)) k_new = k / 2.0;
        if (std::fabs(k_new - k) < 1e-12 * (1.0 + k)) return k_new;
        k = k_new;
    }
    throw NumericError("NonConvergence", "variance-law shape solve did not converge");
}

}  // namespace detail

struct VarianceFit {
    VarianceLaw law;
    double log_likelihood = 0.0;
    std::vector<std::string> notes;
};

inline VarianceFit fit_variance_law(std::span<const double> sigma2, VarianceFamily family) {
    if (sigma2.empty()) throw DataError("EmptyDataset", "no sigma2 values");
    for (double s : sigma2)
        if (!(s > 0.0)) throw DataError("InvalidUnit", "sigma2 values must be positive");

    const double n = static_cast<double>(sigma2.size());
    const double mean = std::accumulate(sigma2.begin(), sigma2.end(), 0.0) / n;
    double mean_log = 0.0, mean_inv = 0.0;
    double min_v = sigma2.front(), max_v = sigma2.front();
    for (double s : sigma2) {
        mean_log += std::log(s);
        mean_inv += 1.0 / s;
        min_v = std::min(min_v, s);
        max_v = std::max(max_v, s);
    }
    mean_log /= n;
    mean_inv /= n;

    VarianceFit fit;
    if (max_v - min_v <= 1e-12 * std::max(1.0, max_v)) {
        fit.law = PointMassVar{mean};
        fit.notes.push_back("degenerate sigma2 sample: fitted point mass at " +
                            std::to_string(mean));
        return fit;
    }

    if (family == VarianceFamily::Gamma) {
        const double target = std::log(mean) - mean_log;  // > 0 by Jensen
        const double shape = detail::solve_log_minus_digamma(target);
        const double rate = shape / mean;
        fit.law = GammaVar{shape, rate};
        fit.log_likelihood = n * (shape * std::log(rate) - std::lgamma(shape)) +
                             (shape - 1.0) * mean_log * n - rate * mean * n;
    } else {
        const double target = mean_log + std::log(mean_inv);  // > 0 by Jensen
        const double shape = detail::solve_log_minus_digamma(target);
        const double scale = shape / mean_inv;
        fit.law = InvGammaVar{shape, scale};
        fit.log_likelihood = n * (shape * std::log(scale) - std::lgamma(shape)) -
                             (shape + 1.0) * mean_log * n - scale * mean_inv * n;
    }
    return fit;
}

inline VarianceFit fit_variance_law(const Dataset& ds, VarianceFamily family) {
    if (ds.kind != PayloadKind::Normal)
        throw UsageError("fit_variance_law: dataset is not normal");
    std::vector<double> s2(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) s2[i] = ds.units[i].normal().sigma2;
    return fit_variance_law(s2, family);
}

// ---------------------------------------------------------------------------
// Empirical prior from pooled draws

inline EmpiricalPrior empirical_prior_from_draws(std::vector<double> draws,
                                                 std::size_t floor = 1000) {
    if (draws.size() < floor)
        throw DataError("TooFewDraws", "need at least " + std::to_string(floor) +
                                           " pooled draws, got " + std::to_string(draws.size()));
    std::sort(draws.begin(), draws.end());
    return EmpiricalPrior{std::move(draws)};
}

}  // namespace rankval
