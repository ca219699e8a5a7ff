#pragma once

// RankingTable assembly: every applicable ranking variable per unit plus
// integer ranks (1 = top). Ties break by unit id so tables are exactly
// reproducible.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "rankval/lambda_curve.hpp"
#include "rankval/rvalue.hpp"
#include "rankval/thresholds.hpp"

namespace rankval {

// rank 1 goes to the best value under the method's orientation.
inline std::vector<int> assign_ranks(std::span<const double> values, bool smaller_better,
                                     std::span<const std::string> ids) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = values[a], vb = values[b];
        if (va != vb) return smaller_better ? va < vb : va > vb;
        return ids[a] < ids[b];
    });
    std::vector<int> ranks(n);
    for (std::size_t pos = 0; pos < n; ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
    return ranks;
}

struct RankingColumn {
    Method method;
    std::vector<double> value;
    std::vector<int> rank;
};

struct RankingDiagnostics {
    std::string prior_family;
    std::vector<double> prior_params;
    std::size_t grid_size = 0;
    double max_residual = 0.0;
    std::size_t boundary_top = 0, no_crossing = 0, multi_root = 0;
    std::vector<std::string> warnings;
};

struct RankingTable {
    std::vector<std::string> ids;
    std::vector<RankingColumn> columns;
    std::vector<double> rvalue_residual;
    std::vector<std::string> rvalue_flags;
    RankingDiagnostics diag;

    const RankingColumn* find(Method m) const {
        for (const auto& c : columns)
            if (c.method == m) return &c;
        return nullptr;
    }
};

inline std::vector<Method> methods_for_kind(PayloadKind kind) {
    switch (kind) {
        case PayloadKind::Normal:
            return {Method::RValue, Method::Mle, Method::PValue, Method::Pm, Method::Per,
                    Method::Bf};
        case PayloadKind::Binomial:
            return {Method::RValue, Method::Mle, Method::Pm, Method::Per};
        case PayloadKind::Draws:
            return {Method::RValue, Method::Pm, Method::Per};
    }
    return {};
}

struct TableOptions {
    std::size_t grid_size = 199;
    std::optional<AlphaGrid> grid;  // default: AlphaGrid::make_for_units(N, grid_size)
    SmoothingConfig smoothing = {};
    double benchmark_c = 0.0;
    // keep the V matrix only while it fits comfortably in memory
    std::size_t matrix_budget = std::size_t{40} * 1000 * 1000;
};

inline RankingTable compute_ranking_table(const Dataset& ds, const PriorSpec& prior,
                                          const TableOptions& opt = {}) {
    RankingTable table;
    table.ids.reserve(ds.size());
    for (const auto& u : ds.units) table.ids.push_back(u.id);

    const AlphaGrid grid =
        opt.grid ? *opt.grid : AlphaGrid::make_for_units(ds.size(), opt.grid_size);

    // r-values via the grid algorithm
    LambdaCurve lambda;
    std::vector<RValueResult> rres;
    if (ds.size() * grid.size() <= opt.matrix_budget) {
        const VMatrix v = build_v_matrix(ds, prior, grid);
        lambda = build_lambda_curve(v, grid, opt.smoothing);
        rres = solve_rvalues(ds, prior, lambda, &v);
    } else {
        lambda = build_lambda_curve_streaming(ds, prior, grid, opt.smoothing);
        rres = solve_rvalues(ds, prior, lambda, nullptr);
    }

    RankingColumn rcol;
    rcol.method = Method::RValue;
    rcol.value.resize(ds.size());
    table.rvalue_residual.resize(ds.size());
    table.rvalue_flags.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        rcol.value[i] = rres[i].rvalue;
        table.rvalue_residual[i] = rres[i].residual;
        std::string f = rvalue_flag_name(rres[i].flag);
        if (rres[i].multiple_roots) f += f.empty() ? "multi-root" : ";multi-root";
        table.rvalue_flags[i] = f;
        table.diag.max_residual = std::max(table.diag.max_residual, rres[i].residual);
        if (rres[i].flag == RValueFlag::AtBoundaryTop) ++table.diag.boundary_top;
        if (rres[i].flag == RValueFlag::NoCrossing) ++table.diag.no_crossing;
        if (rres[i].multiple_roots) ++table.diag.multi_root;
    }
    rcol.rank = assign_ranks(rcol.value, smaller_is_better(Method::RValue), table.ids);
    table.columns.push_back(std::move(rcol));

    for (const Method m : methods_for_kind(ds.kind)) {
        if (m == Method::RValue) continue;
        RankingColumn col;
        col.method = m;
        col.value.resize(ds.size());
        parallel_for(ds.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                col.value[i] = ranking_variable(m, ds.units[i], prior, opt.benchmark_c);
        });
        col.rank = assign_ranks(col.value, smaller_is_better(m), table.ids);
        table.columns.push_back(std::move(col));
    }

    if (const auto* np = std::get_if<NormalPrior>(&prior.theta_law)) {
        table.diag.prior_family = "normal";
        table.diag.prior_params = {np->mu, np->tau2};
    } else if (const auto* bp = std::get_if<BetaPrior>(&prior.theta_law)) {
        table.diag.prior_family = "beta";
        table.diag.prior_params = {bp->a, bp->b};
    } else {
        table.diag.prior_family = "empirical";
    }
    table.diag.grid_size = grid.size();
    for (const auto& w : lambda.warnings) table.diag.warnings.push_back(w);
    return table;
}

}  // namespace rankval
