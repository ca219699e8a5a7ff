#pragma once

// Orchestration behind the CLI: config echo + hashing, the fit -> tailprob
// -> rvalue -> rank -> curves -> bench pipelines, and all file emission.
// Identical config + inputs + seed produce byte-identical outputs apart
// from the manifest timestamp field.

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rankval/io.hpp"
#include "rankval/prior_fit.hpp"
#include "rankval/ranking.hpp"
#include "rankval/simbench.hpp"

namespace rankval {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string subcommand;              // fit|tailprob|rvalue|rank|curves|bench
    std::string input_path;              // unit CSV
    std::string model;                   // normal|binomial|draws|auto
    std::string prior_source = "fit";    // "fit" or a prior JSON path
    std::string variance_family;         // gamma|invgamma ("" = none)
    std::size_t grid_size = 199;
    double smooth_bandwidth = 5.0;
    bool smooth_isotonic = false;
    double benchmark_c = 0.0;
    std::string out_path;
    std::string dump_lambda_path;
    std::string dump_v_path;
    std::uint64_t seed = 1;
    // curves
    std::vector<double> alphas = {0.01, 0.05, 0.1, 0.25};
    double sigma2_min = 0.01, sigma2_max = 10.0;
    std::size_t sigma2_count = 50;
    bool standardized = false;
    // bench
    std::string study;
    std::string bench_config_path;

    json echo() const {
        json j;
        j["subcommand"] = subcommand;
        j["input"] = input_path;
        j["model"] = model;
        j["prior"] = prior_source;
        if (!variance_family.empty()) j["variance_family"] = variance_family;
        j["grid_size"] = grid_size;
        j["smooth_bandwidth"] = smooth_bandwidth;
        j["smooth_isotonic"] = smooth_isotonic;
        j["benchmark_c"] = benchmark_c;
        j["out"] = out_path;
        if (!dump_lambda_path.empty()) j["dump_lambda"] = dump_lambda_path;
        if (!dump_v_path.empty()) j["dump_v"] = dump_v_path;
        j["seed"] = seed;
        if (subcommand == "curves") {
            j["alphas"] = alphas;
            j["sigma2_min"] = sigma2_min;
            j["sigma2_max"] = sigma2_max;
            j["sigma2_count"] = sigma2_count;
            j["standardized"] = standardized;
        }
        if (subcommand == "bench") {
            j["study"] = study;
            j["bench_config"] = bench_config_path;
        }
        return j;
    }

    std::string config_hash() const { return hex64(fnv1a64(echo().dump())); }
};

// ---------------------------------------------------------------------------
// Output helpers

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("FileWriteError", "cannot write '" + path + "'");
    out << content;
}

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace detail

struct RunArtifacts {
    std::vector<std::string> files_written;
    std::vector<std::string> warnings;
    json manifest;
};

inline void write_manifest(const RunConfig& cfg, RunArtifacts& art,
                           const std::string& data_hash,
                           const std::map<std::string, double>& timings_ms) {
    json m;
    m["tool"] = "rankval";
    m["version"] = kVersion;
    m["config"] = cfg.echo();
    m["config_hash"] = cfg.config_hash();
    if (!data_hash.empty()) m["data_hash"] = data_hash;
    m["seed"] = cfg.seed;
    m["timings_ms"] = timings_ms;
    m["timestamp"] = detail::iso_timestamp();
    if (!art.warnings.empty()) m["warnings"] = art.warnings;
    art.manifest = m;
    if (!cfg.out_path.empty()) {
        const std::string path = cfg.out_path + ".manifest.json";
        detail::write_file(path, m.dump(2) + "\n");
        art.files_written.push_back(path);
    }
}

// ---------------------------------------------------------------------------
// Shared steps

inline PayloadKind model_kind_from_string(const std::string& s) {
    if (s == "normal") return PayloadKind::Normal;
    if (s == "binomial") return PayloadKind::Binomial;
    if (s == "draws") return PayloadKind::Draws;
    throw UsageError("unknown model '" + s + "'");
}

inline Dataset load_input(const RunConfig& cfg) {
    if (cfg.input_path.empty()) throw UsageError("missing --in input path");
    Dataset ds = read_dataset_csv_file(cfg.input_path);
    if (cfg.model != "auto" && !cfg.model.empty() &&
        ds.kind != model_kind_from_string(cfg.model)) {
        throw DataError("ModelMismatch", std::string("input parsed as ") +
                                             payload_kind_name(ds.kind) + ", --model says " +
                                             cfg.model);
    }
    return ds;
}

inline PriorSpec obtain_prior(const RunConfig& cfg, const Dataset& ds,
                              RunArtifacts& art) {
    if (cfg.prior_source != "fit") {
        return read_prior_file(cfg.prior_source);
    }
    PriorSpec prior;
    switch (ds.kind) {
        case PayloadKind::Binomial: prior = fit_beta_binomial(ds); break;
        case PayloadKind::Normal: {
            prior = fit_normal_normal(ds);
            if (!cfg.variance_family.empty()) {
                const VarianceFamily fam = cfg.variance_family == "gamma"
                                               ? VarianceFamily::Gamma
                                               : VarianceFamily::InvGamma;
                VarianceFit vfit = fit_variance_law(ds, fam);
                prior.variance_law = vfit.law;
                for (auto& n : vfit.notes) art.warnings.push_back(n);
            }
            break;
        }
        case PayloadKind::Draws: {
            std::vector<double> pooled;
            for (const auto& u : ds.units)
                pooled.insert(pooled.end(), u.draws().draws.begin(), u.draws().draws.end());
            prior.theta_law = empirical_prior_from_draws(std::move(pooled));
            break;
        }
    }
    if (!prior.diag.converged)
        art.warnings.push_back("prior fit did not converge; best point reported");
    return prior;
}

inline TableOptions table_options(const RunConfig& cfg) {
    TableOptions opt;
    opt.grid_size = cfg.grid_size;
    opt.smoothing.bandwidth = cfg.smooth_bandwidth;
    opt.smoothing.isotonic = cfg.smooth_isotonic;
    opt.benchmark_c = cfg.benchmark_c;
    return opt;
}

// ---------------------------------------------------------------------------
// Emission

inline std::string lambda_csv(const LambdaCurve& c, const std::string& config_hash) {
    std::ostringstream out;
    out << "# config=" << config_hash << "\nalpha,lambda_raw,lambda_smoothed\n";
    for (std::size_t j = 0; j < c.grid.size(); ++j)
        out << format_shortest(c.grid[j]) << ',' << format_shortest(c.raw[j]) << ','
            << format_shortest(c.smoothed[j]) << '\n';
    return out.str();
}

inline std::string v_matrix_csv(const VMatrix& v, const AlphaGrid& grid,
                                std::span<const std::string> ids,
                                const std::string& config_hash) {
    std::ostringstream out;
    out << "# config=" << config_hash << "\nid";
    for (const double a : grid.nodes) out << ",alpha_" << format_table(a);
    out << '\n';
    for (std::size_t i = 0; i < v.rows; ++i) {
        out << ids[i];
        for (std::size_t j = 0; j < v.cols; ++j) out << ',' << format_table(v(i, j));
        out << '\n';
    }
    return out.str();
}

inline std::string rvalue_table_csv(const RankingTable& t, const std::string& config_hash) {
    std::ostringstream out;
    out << "# config=" << config_hash << "\nid,rvalue,rank,flags,residual\n";
    const RankingColumn* rv = t.find(Method::RValue);
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
        out << t.ids[i] << ',' << format_table(rv->value[i]) << ',' << rv->rank[i] << ','
            << t.rvalue_flags[i] << ',' << format_table(t.rvalue_residual[i]) << '\n';
    }
    return out.str();
}

inline std::string rank_table_csv(const RankingTable& t, const std::string& config_hash) {
    std::ostringstream out;
    out << "# config=" << config_hash << "\nid";
    for (const auto& col : t.columns)
        out << ',' << method_name(col.method) << ',' << method_name(col.method) << "_rank";
    out << ",flags\n";
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
        out << t.ids[i];
        for (const auto& col : t.columns)
            out << ',' << format_table(col.value[i]) << ',' << col.rank[i];
        out << ',' << t.rvalue_flags[i] << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Subcommand drivers (return artifacts; throwing maps to CLI exit codes)

inline RunArtifacts run_fit(const RunConfig& cfg) {
    RunArtifacts art;
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_input(cfg);
    for (const auto& w : ds.warnings) art.warnings.push_back(w);
    const PriorSpec prior = obtain_prior(cfg, ds, art);
    const std::string dh = dataset_hash(ds);
    json j = prior_to_json(prior, ds.size(), dh);
    j["config_hash"] = cfg.config_hash();
    if (cfg.out_path.empty()) throw UsageError("missing --out path");
    detail::write_file(cfg.out_path, j.dump(2) + "\n");
    art.files_written.push_back(cfg.out_path);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, art, dh, {{"total", ms}});
    return art;
}

inline RunArtifacts run_tailprob(const RunConfig& cfg) {
    RunArtifacts art;
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_input(cfg);
    const PriorSpec prior = obtain_prior(cfg, ds, art);
    const AlphaGrid grid = AlphaGrid::make_for_units(ds.size(), cfg.grid_size);
    const VMatrix v = build_v_matrix(ds, prior, grid);
    std::vector<std::string> ids;
    for (const auto& u : ds.units) ids.push_back(u.id);
    if (cfg.out_path.empty()) throw UsageError("missing --out path");
    detail::write_file(cfg.out_path, v_matrix_csv(v, grid, ids, cfg.config_hash()));
    art.files_written.push_back(cfg.out_path);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, art, dataset_hash(ds), {{"total", ms}});
    return art;
}

inline RunArtifacts run_rvalue_or_rank(const RunConfig& cfg, bool full_table) {
    RunArtifacts art;
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_input(cfg);
    for (const auto& w : ds.warnings) art.warnings.push_back(w);
    const PriorSpec prior = obtain_prior(cfg, ds, art);
    const TableOptions opt = table_options(cfg);
    const RankingTable table = compute_ranking_table(ds, prior, opt);
    for (const auto& w : table.diag.warnings) art.warnings.push_back(w);

    const std::string ch = cfg.config_hash();
    if (cfg.out_path.empty()) throw UsageError("missing --out path");
    detail::write_file(cfg.out_path,
                       full_table ? rank_table_csv(table, ch) : rvalue_table_csv(table, ch));
    art.files_written.push_back(cfg.out_path);

    if (!cfg.dump_lambda_path.empty() || !cfg.dump_v_path.empty()) {
        const AlphaGrid dump_grid = AlphaGrid::make_for_units(ds.size(), cfg.grid_size);
        const VMatrix v = build_v_matrix(ds, prior, dump_grid);
        const LambdaCurve lambda = build_lambda_curve(v, dump_grid, opt.smoothing);
        if (!cfg.dump_lambda_path.empty()) {
            detail::write_file(cfg.dump_lambda_path, lambda_csv(lambda, ch));
            art.files_written.push_back(cfg.dump_lambda_path);
        }
        if (!cfg.dump_v_path.empty()) {
            std::vector<std::string> ids;
            for (const auto& u : ds.units) ids.push_back(u.id);
            detail::write_file(cfg.dump_v_path, v_matrix_csv(v, dump_grid, ids, ch));
            art.files_written.push_back(cfg.dump_v_path);
        }
    }

    // prior echo next to the table (full provenance)
    {
        json pj = prior_to_json(prior, ds.size(), dataset_hash(ds));
        pj["config_hash"] = ch;
        const std::string path = cfg.out_path + ".prior.json";
        detail::write_file(path, pj.dump(2) + "\n");
        art.files_written.push_back(path);
    }
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, art, dataset_hash(ds), {{"total", ms}});
    return art;
}

inline RunArtifacts run_curves(const RunConfig& cfg) {
    RunArtifacts art;
    const auto t0 = std::chrono::steady_clock::now();
    PriorSpec prior;
    std::string dh;
    if (cfg.prior_source != "fit") {
        prior = read_prior_file(cfg.prior_source);
    } else {
        const Dataset ds = load_input(cfg);
        prior = obtain_prior(cfg, ds, art);
        dh = dataset_hash(ds);
    }
    const auto* np = std::get_if<NormalPrior>(&prior.theta_law);
    if (!np) throw UsageError("curves requires a normal prior");
    if (!prior.variance_law)
        throw UsageError("curves requires a variance law (use --variance-family with fit)");

    const VarianceLaw std_law = scale_variance_law(*prior.variance_law, 1.0 / np->tau2);
    std::vector<double> s2_grid(cfg.sigma2_count);
    const double lo = std::log(cfg.sigma2_min), hi = std::log(cfg.sigma2_max);
    for (std::size_t k = 0; k < cfg.sigma2_count; ++k)
        s2_grid[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) /
                                       static_cast<double>(cfg.sigma2_count - 1));

    const std::vector<ThresholdMethod> methods = {
        ThresholdMethod::Mle, ThresholdMethod::Pv0, ThresholdMethod::Pvc, ThresholdMethod::Pm,
        ThresholdMethod::Per, ThresholdMethod::Bf, ThresholdMethod::MaxAgree};
    std::ostringstream out;
    out << "# config=" << cfg.config_hash() << "\nmethod,alpha,sigma2,threshold\n";
    const double tau = std::sqrt(np->tau2);
    for (const ThresholdMethod m : methods) {
        for (const double a : cfg.alphas) {
            if (m == ThresholdMethod::Bf && a >= 0.5) continue;
            const double u = solve_u_alpha(m, a, std_law, cfg.benchmark_c);
            const double theta_alpha = norm_quantile(1.0 - a);
            for (const double s2 : s2_grid) {
                // s2 is on the standardized scale; report either scale
                const double t_std = threshold_value(m, u, s2, theta_alpha, cfg.benchmark_c);
                const double sigma2_out = cfg.standardized ? s2 : s2 * np->tau2;
                const double t_out = cfg.standardized ? t_std : np->mu + tau * t_std;
                out << threshold_method_name(m) << ',' << format_table(a) << ','
                    << format_table(sigma2_out) << ',' << format_table(t_out) << '\n';
            }
        }
    }
    if (cfg.out_path.empty()) throw UsageError("missing --out path");
    detail::write_file(cfg.out_path, out.str());
    art.files_written.push_back(cfg.out_path);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, art, dh, {{"total", ms}});
    return art;
}

// bench configs arrive as JSON; see README for the schema.
inline RunArtifacts run_bench(const RunConfig& cfg) {
    RunArtifacts art;
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.bench_config_path.empty()) throw UsageError("missing --config for bench");
    std::ifstream in(cfg.bench_config_path);
    if (!in) throw DataError("FileNotFound", "cannot open '" + cfg.bench_config_path + "'");
    json bc;
    in >> bc;

    std::ostringstream out;
    out << "# config=" << cfg.config_hash() << "\nstudy,method,alpha_or_t,metric,value,mc_se,seed\n";
    const std::uint64_t seed = bc.value("seed", cfg.seed);
    auto emit = [&](const std::string& study, const std::string& method, double key,
                    const std::string& metric, double value, double se) {
        out << study << ',' << method << ',' << format_table(key) << ',' << metric << ','
            << format_table(value) << ',' << format_table(se) << ',' << seed << '\n';
    };

    auto parse_methods = [](const json& j, std::vector<Method> fallback) {
        if (!j.contains("methods")) return fallback;
        std::vector<Method> out_m;
        for (const auto& name : j["methods"]) {
            const std::string s = name;
            if (s == "rvalue") out_m.push_back(Method::RValue);
            else if (s == "mle") out_m.push_back(Method::Mle);
            else if (s == "pv" || s == "pvalue") out_m.push_back(Method::PValue);
            else if (s == "pm") out_m.push_back(Method::Pm);
            else if (s == "per") out_m.push_back(Method::Per);
            else if (s == "bf") out_m.push_back(Method::Bf);
            else throw UsageError("unknown method '" + s + "' in bench config");
        }
        return out_m;
    };

    if (cfg.study == "agreement" || cfg.study == "enrichment") {
        SimConfig sc;
        sc.n_units = bc.value("n_units", std::size_t{100000});
        sc.seed = seed;
        if (bc.contains("alphas")) sc.alphas = bc["alphas"].get<std::vector<double>>();
        if (bc.contains("theta_law")) {
            const auto& tl = bc["theta_law"];
            sc.theta_law = NormalPrior{tl.value("mu", 0.0), tl.value("tau2", 1.0)};
        }
        const std::vector<Method> methods = parse_methods(
            bc, {Method::RValue, Method::Mle, Method::PValue, Method::Pm, Method::Per});
        std::vector<double> cv_list = {1.0};
        if (bc.contains("cv_list")) cv_list = bc["cv_list"].get<std::vector<double>>();
        const double mean_s2 = bc.value("sigma2_mean", 1.0);
        for (const double cv : cv_list) {
            const double shape = 1.0 / (cv * cv);
            sc.variance_law = GammaVar{shape, shape / mean_s2};
            const AgreementReport rep = agreement_study(sc, methods);
            for (const auto& row : rep.rows) {
                const std::string m = method_name(row.method);
                emit(cfg.study + "/cv=" + format_table(cv), m, row.alpha, "agreement",
                     row.agreement, row.mc_se);
                emit(cfg.study + "/cv=" + format_table(cv), m, row.alpha, "fdr", row.fdr, 0.0);
                emit(cfg.study + "/cv=" + format_table(cv), m, row.alpha, "avg_power",
                     row.avg_power, 0.0);
                emit(cfg.study + "/cv=" + format_table(cv), m, row.alpha, "sel_sigma2_median",
                     row.sel_sigma2_median, 0.0);
                emit(cfg.study + "/cv=" + format_table(cv), m, row.alpha, "sel_sigma2_iqr",
                     row.sel_sigma2_iqr, 0.0);
            }
            emit(cfg.study + "/cv=" + format_table(cv), "marginal", 0.0, "sigma2_median",
                 rep.marginal_sigma2_median, 0.0);
        }
    } else if (cfg.study == "validation") {
        const Dataset train = read_dataset_csv_file(bc.at("train_csv"));
        const Dataset full = read_dataset_csv_file(bc.at("full_csv"));
        const int reps = bc.value("replicates", 2000);
        std::vector<int> t_list = {5, 10, 25, 50, 100};
        if (bc.contains("t_list")) t_list = bc["t_list"].get<std::vector<int>>();
        const std::vector<Method> methods =
            parse_methods(bc, {Method::RValue, Method::Mle, Method::Pm, Method::Per});
        const PriorSpec full_prior = fit_beta_binomial(full);
        const RankingSet set = rankings_from_train(train, full, methods, table_options(cfg));
        const auto rows = similarity_validation(full, full_prior, set, t_list, reps, seed);
        for (const auto& row : rows)
            emit("validation", row.ranking, row.t, "mean_similarity", row.mean_score, row.mc_se);
    } else {
        throw UsageError("unknown study '" + cfg.study + "'");
    }

    if (cfg.out_path.empty()) throw UsageError("missing --out path");
    detail::write_file(cfg.out_path, out.str());
    art.files_written.push_back(cfg.out_path);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, art, "", {{"total", ms}});
    return art;
}

inline RunArtifacts run_pipeline(const RunConfig& cfg) {
    if (cfg.subcommand == "fit") return run_fit(cfg);
    if (cfg.subcommand == "tailprob") return run_tailprob(cfg);
    if (cfg.subcommand == "rvalue") return run_rvalue_or_rank(cfg, false);
    if (cfg.subcommand == "rank") return run_rvalue_or_rank(cfg, true);
    if (cfg.subcommand == "curves") return run_curves(cfg);
    if (cfg.subcommand == "bench") return run_bench(cfg);
    throw UsageError("unknown subcommand '" + cfg.subcommand + "'");
}

}  // namespace rankval
