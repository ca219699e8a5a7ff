#pragma once

// Posterior tail probabilities per unit: V(theta) = P(theta_i >= theta | D_i)
// and V_alpha = V(theta_alpha). Pure functions of immutable inputs.

#include <algorithm>
#include <cmath>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/math/special.hpp"
#include "rankval/model.hpp"

namespace rankval {

// Normal/normal posterior: theta | x, sigma2 ~ N(m, v) with
// m = mu + (x - mu) tau2/(tau2 + sigma2), v = sigma2 tau2/(sigma2 + tau2).
inline double tail_normal(double x, double sigma2, const NormalPrior& prior, double theta) {
    if (!(sigma2 > 0.0)) throw std::domain_error("tail_normal: sigma2 must be > 0");
    if (prior.tau2 <= 0.0) return theta <= prior.mu ? 1.0 : 0.0;
    const double w = prior.tau2 + sigma2;
    const double m = prior.mu + (x - prior.mu) * prior.tau2 / w;
    const double v = sigma2 * prior.tau2 / w;
    return norm_sf((theta - m) / std::sqrt(v));
}

// Beta-binomial posterior: theta | y, n ~ Beta(a+y, b+n-y).
// theta outside (0,1) returns the support limit by convention.
inline double tail_beta_binomial(long y, long n, const BetaPrior& prior, double theta) {
    if (y < 0 || y > n || n < 1) throw std::domain_error("tail_beta_binomial: bad (y,n)");
    if (theta <= 0.0) return 1.0;
    if (theta >= 1.0) return 0.0;
    return inc_beta_upper(prior.a + static_cast<double>(y),
                          prior.b + static_cast<double>(n - y), theta);
}

// Empirical fraction of posterior draws >= theta (draws must be sorted).
inline double tail_from_sorted_draws(std::span<const double> sorted, double theta) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), theta);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

inline double tail_from_draws(std::vector<double> draws, double theta) {
    if (draws.empty()) throw DataError("TooFewDraws", "no posterior draws");
    std::sort(draws.begin(), draws.end());
    return tail_from_sorted_draws(draws, theta);
}

// E(theta_i | D_i); exact for the conjugate models, draw average otherwise.
inline double posterior_mean(const UnitRecord& unit, const PriorSpec& prior) {
    switch (unit.kind()) {
        case PayloadKind::Normal: {
            const auto& o = unit.normal();
            const auto& np = std::get<NormalPrior>(prior.theta_law);
            if (np.tau2 <= 0.0) return np.mu;
            return np.mu + (o.x - np.mu) * np.tau2 / (np.tau2 + o.sigma2);
        }
        case PayloadKind::Binomial: {
            const auto& o = unit.binomial();
            const auto& bp = std::get<BetaPrior>(prior.theta_law);
            return (static_cast<double>(o.y) + bp.a) /
                   (static_cast<double>(o.n) + bp.a + bp.b);
        }
        case PayloadKind::Draws: {
            const auto& d = unit.draws().draws;
            double acc = 0.0;
            for (double v : d) acc += v;
            return acc / static_cast<double>(d.size());
        }
    }
    return 0.0;
}

// Per-unit tail-probability closure. evaluate_at_theta is non-increasing
// in theta; evaluate(alpha) is non-decreasing in alpha.
class TailProbFn {
public:
    TailProbFn(const UnitRecord& unit, const PriorSpec& prior)
        : prior_(&prior), kind_(unit.kind()) {
        switch (kind_) {
            case PayloadKind::Normal: {
                x_ = unit.normal().x;
                sigma2_ = unit.normal().sigma2;
                break;
            }
            case PayloadKind::Binomial: {
                y_ = unit.binomial().y;
                n_ = unit.binomial().n;
                break;
            }
            case PayloadKind::Draws: {
                sorted_draws_ = unit.draws().draws;
                std::sort(sorted_draws_.begin(), sorted_draws_.end());
                break;
            }
        }
    }

    double evaluate_at_theta(double theta) const {
        switch (kind_) {
            case PayloadKind::Normal:
                return tail_normal(x_, sigma2_, std::get<NormalPrior>(prior_->theta_law), theta);
            case PayloadKind::Binomial:
                return tail_beta_binomial(y_, n_, std::get<BetaPrior>(prior_->theta_law), theta);
            case PayloadKind::Draws:
                return tail_from_sorted_draws(sorted_draws_, theta);
        }
        return 0.0;
    }

    double evaluate(double alpha) const {
        return evaluate_at_theta(prior_upper_quantile(prior_->theta_law, alpha));
    }

    // P(theta_i <= q | D_i), the complementary cdf route used by oracles.
    double posterior_cdf(double q) const {
        switch (kind_) {
            case PayloadKind::Normal: {
                const auto& np = std::get<NormalPrior>(prior_->theta_law);
                if (np.tau2 <= 0.0) return q < np.mu ? 0.0 : 1.0;
                const double w = np.tau2 + sigma2_;
                const double m = np.mu + (x_ - np.mu) * np.tau2 / w;
                const double v = sigma2_ * np.tau2 / w;
                return norm_cdf((q - m) / std::sqrt(v));
            }
            case PayloadKind::Binomial: {
                const auto& bp = std::get<BetaPrior>(prior_->theta_law);
                return inc_beta(bp.a + static_cast<double>(y_),
                                bp.b + static_cast<double>(n_ - y_), q);
            }
            case PayloadKind::Draws: {
                const auto it =
                    std::upper_bound(sorted_draws_.begin(), sorted_draws_.end(), q);
                return static_cast<double>(it - sorted_draws_.begin()) /
                       static_cast<double>(sorted_draws_.size());
            }
        }
        return 0.0;
    }

    PayloadKind kind() const { return kind_; }

private:
    const PriorSpec* prior_;
    PayloadKind kind_;
    double x_ = 0.0, sigma2_ = 1.0;
    long y_ = 0, n_ = 1;
    std::vector<double> sorted_draws_;
};

// PER_i = 1 - integral over (0,1) of V_alpha(D_i) d alpha, composite
// trapezoid on a uniform alpha grid (endpoints clamped just inside).
inline double per_integral(const TailProbFn& tail, std::size_t nodes = 2001) {
    if (nodes < 201) nodes = 201;
    const double eps = 1e-9;
    double acc = 0.0;
    double prev = tail.evaluate(eps);
    const double h = 1.0 / static_cast<double>(nodes - 1);
    for (std::size_t k = 1; k < nodes; ++k) {
        const double alpha = std::min(1.0 - eps, static_cast<double>(k) * h);
        const double cur = tail.evaluate(alpha);
        acc += 0.5 * (prev + cur) * h;
        prev = cur;
    }
    return 1.0 - acc;
}

}  // namespace rankval
