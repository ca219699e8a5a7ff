#include <gtest/gtest.h>

#include <cmath>

#include "rankval/math/quadrature.hpp"
#include "rankval/tail_prob.hpp"

using namespace rankval;

namespace {
const PriorSpec std_normal_prior = [] {
    PriorSpec p;
    p.theta_law = NormalPrior{0.0, 1.0};
    return p;
}();

const PriorSpec nba_prior = [] {
    PriorSpec p;
    p.theta_law = BetaPrior{15.12, 5.38};
    return p;
}();
}  // namespace

TEST(TailNormal, StandardizedExamples) {
    const NormalPrior prior{0.0, 1.0};
    EXPECT_NEAR(tail_normal(0.0, 1.0, prior, 0.0), 0.5, 1e-14);
    // posterior mean 2/(1+1) = 1 = theta
    EXPECT_NEAR(tail_normal(2.0, 1.0, prior, 1.0), 0.5, 1e-14);
    EXPECT_NEAR(tail_normal(1.0, 1.0, prior, 0.0), norm_cdf(0.5 / std::sqrt(0.5)), 1e-12);
    EXPECT_NEAR(tail_normal(1.0, 1.0, prior, 0.0), 0.7602, 1e-4);
}

TEST(TailNormal, GeneralScaleMatchesStandardized) {
    // mu + tau*(.) transform: V is invariant
    const NormalPrior gen{3.0, 4.0};
    const double tau = 2.0;
    const double x_std = 0.8, s_std = 1.7, theta_std = 1.1;
    EXPECT_NEAR(tail_normal(3.0 + tau * x_std, s_std * 4.0, gen, 3.0 + tau * theta_std),
                tail_normal(x_std, s_std, NormalPrior{0.0, 1.0}, theta_std), 1e-13);
}

TEST(TailBetaBinomial, ClosedFormAndLimits) {
    const BetaPrior flat{1.0, 1.0};
    // posterior Beta(2,1): P(theta >= 0.5) = 1 - 0.25 = 0.75
    EXPECT_NEAR(tail_beta_binomial(1, 1, flat, 0.5), 0.75, 1e-13);
    const BetaPrior nba{15.12, 5.38};
    EXPECT_DOUBLE_EQ(tail_beta_binomial(7, 10, nba, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(tail_beta_binomial(7, 10, nba, -0.3), 1.0);
    EXPECT_DOUBLE_EQ(tail_beta_binomial(7, 10, nba, 1.0), 0.0);
}

TEST(TailBetaBinomial, MatchesAdaptiveQuadratureOracle) {
    const BetaPrior nba{15.12, 5.38};
    const double a = nba.a + 125.0, b = nba.b + 8.0;  // y=125, n=133
    const double theta = (125.0 + nba.a) / (133.0 + nba.a + nba.b);
    const double lnorm = -log_beta(a, b);
    const double oracle =
        integrate([&](double t) { return std::exp(lnorm + (a - 1.0) * std::log(t) +
                                                  (b - 1.0) * std::log1p(-t)); },
                  theta, 1.0, 1e-12)
            .value;
    const double got = tail_beta_binomial(125, 133, nba, theta);
    EXPECT_GT(got, 0.0);
    EXPECT_LT(got, 1.0);
    EXPECT_NEAR(got, oracle, 1e-8);
}

TEST(TailFromDraws, EmpiricalFraction) {
    EXPECT_DOUBLE_EQ(tail_from_draws({1.0, 2.0, 3.0, 4.0}, 2.5), 0.5);
    EXPECT_DOUBLE_EQ(tail_from_draws({1.0, 2.0, 3.0, 4.0}, 9.0), 0.0);
    EXPECT_DOUBLE_EQ(tail_from_draws({1.0, 2.0, 3.0, 4.0}, -1.0), 1.0);

    std::vector<double> z(100000);
    for (std::size_t i = 0; i < z.size(); ++i) {
        RngStream rng(31, i);
        z[i] = rng.normal();
    }
    EXPECT_NEAR(tail_from_draws(std::move(z), 1.2816), 0.10, 0.004);
}

TEST(TailProb, MonotoneInDataAndAlpha) {
    // binomial: V increases in y at fixed n
    const BetaPrior nba{15.12, 5.38};
    const double theta = 0.8;
    double prev = -1.0;
    for (long y = 0; y <= 50; y += 5) {
        const double v = tail_beta_binomial(y, 50, nba, theta);
        EXPECT_GE(v, prev);
        prev = v;
    }
    // normal: V increases in x at fixed sigma2
    prev = -1.0;
    for (double x = -4.0; x <= 4.0; x += 0.5) {
        const double v = tail_normal(x, 0.7, NormalPrior{0.0, 1.0}, 1.0);
        EXPECT_GT(v, prev);
        prev = v;
    }
    // evaluate(alpha) non-decreasing in alpha, -> 1 as alpha -> 1
    const UnitRecord u{"p", BinomialObs{20, 30}};
    const TailProbFn tail(u, nba_prior);
    prev = -1.0;
    for (double a : {0.001, 0.01, 0.1, 0.3, 0.6, 0.9, 0.999, 0.999999}) {
        const double v = tail.evaluate(a);
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_GT(prev, 0.999);
}

TEST(PosteriorMean, NbaTableValues) {
    EXPECT_NEAR(posterior_mean({"roberts", BinomialObs{125, 133}}, nba_prior), 0.913, 5e-4);
    EXPECT_NEAR(posterior_mean({"allen", BinomialObs{105, 116}}, nba_prior), 0.880, 5e-4);
    EXPECT_NEAR(posterior_mean({"durant", BinomialObs{703, 805}}, nba_prior), 0.870, 5e-4);
}

TEST(PerIntegral, MedianUnitIsHalf) {
    const UnitRecord u{"m", NormalObs{0.0, 1.0}};
    EXPECT_NEAR(per_integral(TailProbFn(u, std_normal_prior)), 0.5, 1e-3);
}

TEST(PerIntegral, MatchesDirectPosteriorComputation) {
    // PER = P(theta_i <= theta | D), theta ~ prior, by prior-quadrature oracle
    {
        const UnitRecord u{"n", NormalObs{1.3, 0.6}};
        const TailProbFn tail(u, std_normal_prior);
        const double direct =
            integrate([&](double q) { return tail.posterior_cdf(q) *
                                             std::exp(-0.5 * q * q) / std::sqrt(2 * M_PI); },
                      -10.0, 10.0, 1e-11)
                .value;
        EXPECT_NEAR(per_integral(tail), direct, 1e-3);
    }
    {
        const UnitRecord u{"b", BinomialObs{59, 62}};
        const TailProbFn tail(u, nba_prior);
        const auto& bp = std::get<BetaPrior>(nba_prior.theta_law);
        const double lnorm = -log_beta(bp.a, bp.b);
        const double direct =
            integrate([&](double q) {
                return tail.posterior_cdf(q) *
                       std::exp(lnorm + (bp.a - 1.0) * std::log(q) +
                                (bp.b - 1.0) * std::log1p(-q));
            }, 0.0, 1.0, 1e-11)
                .value;
        EXPECT_NEAR(per_integral(tail), direct, 1e-3);
    }
}
