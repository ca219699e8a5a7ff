#pragma once

// Monte-Carlo studies: agreement/FDR/power across ranking methods,
// variance enrichment of top lists, and the posterior-replicate
// similarity-score validation. Counter-based streams keyed by
// (replicate, unit) make every study reproducible and schedule-free.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankval/errors.hpp"
#include "rankval/prior_fit.hpp"
#include "rankval/ranking.hpp"
#include "rankval/rvalue.hpp"

namespace rankval {

struct SimConfig {
    std::size_t n_units = 100000;
    PayloadKind kind = PayloadKind::Normal;
    ThetaLaw theta_law = NormalPrior{0.0, 1.0};
    VarianceLaw variance_law = GammaVar{1.0, 1.0};  // normal kind
    long n_lo = 10, n_hi = 200;                     // binomial kind: n_i ~ U{n_lo..n_hi}
    std::vector<double> alphas = {0.1};
    std::uint64_t seed = 1;
    int replicates = 1;

    void validate() const {
        if (n_units == 0) throw UsageError("SimConfig: n_units must be positive");
        if (alphas.empty()) throw UsageError("SimConfig: alphas must be nonempty");
        if (replicates < 1) throw UsageError("SimConfig: replicates must be >= 1");
    }
};

struct SimulatedPopulation {
    std::vector<double> theta;
    std::vector<double> true_rank_frac;  // 1 - F(theta_i)
    std::vector<double> x, sigma2;       // normal kind
    std::vector<long> y, n;              // binomial kind
};

inline SimulatedPopulation simulate_population(const SimConfig& cfg, int replicate = 0) {
    cfg.validate();
    SimulatedPopulation pop;
    const std::size_t N = cfg.n_units;
    pop.theta.resize(N);
    pop.true_rank_frac.resize(N);
    if (cfg.kind == PayloadKind::Normal) {
        pop.x.resize(N);
        pop.sigma2.resize(N);
    } else {
        pop.y.resize(N);
        pop.n.resize(N);
    }
    const std::uint64_t rep_base =
        static_cast<std::uint64_t>(replicate) * static_cast<std::uint64_t>(N);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            RngStream rng(cfg.seed, rep_base + i);
            double th;
            if (const auto* np = std::get_if<NormalPrior>(&cfg.theta_law)) {
                th = np->mu + std::sqrt(np->tau2) * rng.normal();
            } else if (const auto* bp = std::get_if<BetaPrior>(&cfg.theta_law)) {
                th = rng.beta(bp->a, bp->b);
            } else {
                const auto& d = std::get<EmpiricalPrior>(cfg.theta_law).sorted_draws;
                th = d[rng.uniform_int(0, d.size() - 1)];
            }
            pop.theta[i] = th;
            pop.true_rank_frac[i] = 1.0 - prior_cdf(cfg.theta_law, th);
            if (cfg.kind == PayloadKind::Normal) {
                const double s2 = variance_law_draw(cfg.variance_law, rng);
                pop.sigma2[i] = s2;
                pop.x[i] = th + std::sqrt(s2) * rng.normal();
            } else {
                const long n = static_cast<long>(
                    rng.uniform_int(static_cast<std::uint64_t>(cfg.n_lo),
                                    static_cast<std::uint64_t>(cfg.n_hi)));
                pop.n[i] = n;
                pop.y[i] = rng.binomial(n, th);
            }
        }
    });
    return pop;
}

// ---------------------------------------------------------------------------
// Top-m selection masks (rank-based selection, |top| = m exactly)

// mask of the m best entries; ties resolved by index for determinism.
inline std::vector<char> top_m_mask(std::span<const double> stat, std::size_t m,
                                    bool smaller_better) {
    const std::size_t N = stat.size();
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto cmp = [&](std::size_t a, std::size_t b) {
        if (stat[a] != stat[b]) return smaller_better ? stat[a] < stat[b] : stat[a] > stat[b];
        return a < b;
    };
    if (m < N) {
        std::nth_element(idx.begin(), idx.begin() + static_cast<long>(m), idx.end(), cmp);
    }
    std::vector<char> mask(N, 0);
    for (std::size_t k = 0; k < std::min(m, N); ++k) mask[idx[k]] = 1;
    return mask;
}

// ---------------------------------------------------------------------------
// Agreement study (normal/normal)

struct AgreementRow {
    Method method;
    double alpha = 0.0;
    double agreement = 0.0;  // |reported AND true| / N
    double fdr = 0.0;
    double avg_power = 0.0;
    double sel_sigma2_median = 0.0;
    double sel_sigma2_iqr = 0.0;
    double mc_se = 0.0;  // binomial se of the agreement estimate
};

struct AgreementReport {
    std::vector<AgreementRow> rows;
    double marginal_sigma2_median = 0.0;
    std::size_t n_units = 0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double iqr_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
}

}  // namespace detail

// Ranking statistics on raw arrays (normal model, generating prior known).
// Monotone-equivalent forms are used where they save special functions.
inline std::vector<double> normal_ranking_stat(Method m, std::span<const double> x,
                                               std::span<const double> sigma2,
                                               const NormalPrior& prior,
                                               const ClosedFormRValue* engine) {
    const std::size_t N = x.size();
    std::vector<double> stat(N);
    const double tau2 = prior.tau2;
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double xs = (x[i] - prior.mu) / std::sqrt(tau2);
            const double s = sigma2[i] / tau2;
            switch (m) {
                case Method::Mle: stat[i] = x[i]; break;
                case Method::PValue: stat[i] = -xs / std::sqrt(s); break;  // p monotone in -z
                case Method::Pm: stat[i] = xs / (s + 1.0); break;
                case Method::Per:
                    // PER is monotone in -x/sqrt((s+1)(2s+1))
                    stat[i] = xs / std::sqrt((s + 1.0) * (2.0 * s + 1.0));
                    stat[i] = -stat[i];
                    break;
                case Method::Bf:
                    stat[i] = xs <= 0.0 ? -std::numeric_limits<double>::infinity()
                                        : 0.5 * std::log(s / (s + 1.0)) +
                                              xs * xs / (2.0 * s * (s + 1.0));
                    break;
                case Method::RValue: stat[i] = engine->rvalue(x[i], sigma2[i]); break;
            }
        }
    });
    return stat;
}

inline bool stat_smaller_is_better(Method m) {
    // sign conventions of normal_ranking_stat above
    return m == Method::RValue || m == Method::PValue || m == Method::Per;
}

inline AgreementReport agreement_study(const SimConfig& cfg, const std::vector<Method>& methods) {
    if (cfg.kind != PayloadKind::Normal)
        throw UsageError("agreement_study: normal model only");
    const SimulatedPopulation pop = simulate_population(cfg);
    const auto& prior = std::get<NormalPrior>(cfg.theta_law);
    ClosedFormRValue engine(prior, cfg.variance_law);

    AgreementReport report;
    report.n_units = cfg.n_units;
    report.marginal_sigma2_median = detail::median_of(pop.sigma2);
    const std::size_t N = cfg.n_units;

    for (const Method m : methods) {
        const std::vector<double> stat =
            normal_ranking_stat(m, pop.x, pop.sigma2, prior, &engine);
        for (const double alpha : cfg.alphas) {
            const std::size_t msel =
                static_cast<std::size_t>(std::llround(alpha * static_cast<double>(N)));
            const std::vector<char> reported = top_m_mask(stat, msel, stat_smaller_is_better(m));
            const std::vector<char> truth = top_m_mask(pop.theta, msel, false);
            std::size_t hits = 0;
            std::vector<double> sel_s2;
            sel_s2.reserve(msel);
            for (std::size_t i = 0; i < N; ++i) {
                if (reported[i]) {
                    sel_s2.push_back(pop.sigma2[i]);
                    if (truth[i]) ++hits;
                }
            }
            AgreementRow row;
            row.method = m;
            row.alpha = alpha;
            row.agreement = static_cast<double>(hits) / static_cast<double>(N);
            row.fdr = msel ? 1.0 - static_cast<double>(hits) / static_cast<double>(msel) : 0.0;
            row.avg_power = msel ? static_cast<double>(hits) / static_cast<double>(msel) : 0.0;
            row.sel_sigma2_median = detail::median_of(sel_s2);
            row.sel_sigma2_iqr = detail::iqr_of(std::move(sel_s2));
            row.mc_se = std::sqrt(std::max(row.agreement * (1.0 - row.agreement), 1e-300) /
                                  static_cast<double>(N));
            report.rows.push_back(row);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Similarity-score validation (train ranking vs posterior replicates)

struct SimilarityRow {
    std::string ranking;
    int t = 0;
    double mean_score = 0.0;
    double mc_se = 0.0;
};

struct RankingSet {
    std::vector<std::string> names;
    std::vector<std::vector<int>> ranks;  // each a permutation of 1..N
};

// full_ds/full_prior define the posterior theta replicates; each named
// ranking (computed from whatever data) is scored by top-t overlap with
// the true rank of every replicate.
inline std::vector<SimilarityRow> similarity_validation(const Dataset& full_ds,
                                                        const PriorSpec& full_prior,
                                                        const RankingSet& rankings,
                                                        const std::vector<int>& t_list,
                                                        int replicates, std::uint64_t seed) {
    if (full_ds.kind != PayloadKind::Binomial)
        throw UsageError("similarity_validation: binomial model only");
    const auto& bp = std::get<BetaPrior>(full_prior.theta_law);
    const std::size_t N = full_ds.size();
    for (const auto& r : rankings.ranks)
        if (r.size() != N) throw UsageError("similarity_validation: rank vector size mismatch");

    // accumulate per (ranking, t): sum and sum of squares across replicates
    const std::size_t R = rankings.names.size(), T = t_list.size();
    std::vector<double> sum(R * T, 0.0), sumsq(R * T, 0.0);
    std::vector<double> theta(N);
    std::vector<std::size_t> order(N);
    std::vector<int> true_rank(N);

    for (int rep = 0; rep < replicates; ++rep) {
        const std::uint64_t rep_base = static_cast<std::uint64_t>(rep) * N;
        for (std::size_t i = 0; i < N; ++i) {
            RngStream rng(seed, rep_base + i);
            const auto& o = full_ds.units[i].binomial();
            theta[i] = rng.beta(bp.a + static_cast<double>(o.y),
                                bp.b + static_cast<double>(o.n - o.y));
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (theta[a] != theta[b]) return theta[a] > theta[b];
            return a < b;
        });
        for (std::size_t pos = 0; pos < N; ++pos) true_rank[order[pos]] = static_cast<int>(pos) + 1;

        for (std::size_t rk = 0; rk < R; ++rk) {
            const std::vector<int>& est = rankings.ranks[rk];
            for (std::size_t ti = 0; ti < T; ++ti) {
                const int t = t_list[ti];
                int hits = 0;
                for (std::size_t i = 0; i < N; ++i)
                    if (est[i] <= t && true_rank[i] <= t) ++hits;
                const double score = static_cast<double>(hits) / static_cast<double>(t);
                sum[rk * T + ti] += score;
                sumsq[rk * T + ti] += score * score;
            }
        }
    }

    std::vector<SimilarityRow> rows;
    for (std::size_t rk = 0; rk < R; ++rk) {
        for (std::size_t ti = 0; ti < T; ++ti) {
            SimilarityRow row;
            row.ranking = rankings.names[rk];
            row.t = t_list[ti];
            const double n = static_cast<double>(replicates);
            row.mean_score = sum[rk * T + ti] / n;
            const double var =
                std::max(0.0, sumsq[rk * T + ti] / n - row.mean_score * row.mean_score);
            row.mc_se = std::sqrt(var / n);
            rows.push_back(row);
        }
    }
    return rows;
}

// Convenience: build the ranking set from a train-season dataset with the
// standard methods, checking id agreement with the full dataset.
inline RankingSet rankings_from_train(const Dataset& train_ds, const Dataset& full_ds,
                                      const std::vector<Method>& methods,
                                      const TableOptions& opt = {}) {
    if (train_ds.size() != full_ds.size())
        throw DataError("MismatchedUnitIds", "train and full datasets differ in size");
    std::unordered_map<std::string, std::size_t> full_pos;
    for (std::size_t i = 0; i < full_ds.size(); ++i) full_pos[full_ds.units[i].id] = i;

    const PriorSpec train_prior = fit_beta_binomial(train_ds);
    const RankingTable table = compute_ranking_table(train_ds, train_prior, opt);

    RankingSet set;
    for (const Method m : methods) {
        const RankingColumn* col = table.find(m);
        if (!col) throw UsageError("rankings_from_train: method not available for this model");
        std::vector<int> aligned(full_ds.size());
        for (std::size_t i = 0; i < train_ds.size(); ++i) {
            const auto it = full_pos.find(train_ds.units[i].id);
            if (it == full_pos.end())
                throw DataError("MismatchedUnitIds",
                                "unit '" + train_ds.units[i].id + "' missing from full dataset");
            aligned[it->second] = col->rank[i];
        }
        set.names.emplace_back(method_name(m));
        set.ranks.push_back(std::move(aligned));
    }
    return set;
}

// ---------------------------------------------------------------------------
// Distribution checks

// Kolmogorov-Smirnov distance to Uniform(0,1).
inline double ks_uniform(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double hi = (static_cast<double>(i) + 1.0) / n - values[i];
        const double lo = values[i] - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

}  // namespace rankval
