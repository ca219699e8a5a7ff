// rankval: empirical-Bayes r-value ranking for large collections of
// noisy measurement units, with baseline rankers and a Monte-Carlo
// benchmark harness. See README.md for formats and examples.

#include <iostream>

#include <CLI11.hpp>

#include "rankval/pipeline.hpp"

namespace {

void add_common(CLI::App* sub, rankval::RunConfig& cfg, bool needs_input = true) {
    if (needs_input) sub->add_option("--in", cfg.input_path, "input unit CSV");
    sub->add_option("--model", cfg.model, "normal|binomial|draws|auto")->default_val("auto");
    sub->add_option("--prior", cfg.prior_source, "'fit' or a prior JSON path")
        ->default_val("fit");
    sub->add_option("--variance-family", cfg.variance_family,
                    "gamma|invgamma (normal-model variance law, fit from sigma2)");
    sub->add_option("--grid-size", cfg.grid_size, "alpha grid nodes")->default_val(199);
    sub->add_option("--smooth-bandwidth", cfg.smooth_bandwidth,
                    "lambda smoothing bandwidth, grid-index units")
        ->default_val(5.0);
    sub->add_flag("--smooth-isotonic", cfg.smooth_isotonic,
                  "project the smoothed lambda curve to be non-increasing");
    sub->add_option("--benchmark-null", cfg.benchmark_c, "PV benchmark null c")
        ->default_val(0.0);
    sub->add_option("--seed", cfg.seed, "seed recorded in the manifest")->default_val(1);
    sub->add_option("--out", cfg.out_path, "output path")->required();
}

int error_json(const std::string& code, const std::string& message, int exit_code) {
    rankval::json j;
    j["error"] = {{"code", code}, {"message", message}, {"exit", exit_code}};
    std::cerr << j.dump() << "\n";
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rankval: empirical-Bayes r-value ranking and benchmarks"};
    app.require_subcommand(1);

    rankval::RunConfig cfg;

    CLI::App* fit = app.add_subcommand("fit", "fit a prior by marginal maximum likelihood");
    add_common(fit, cfg);

    CLI::App* tailprob =
        app.add_subcommand("tailprob", "dump the V matrix (units x alpha grid) as CSV");
    add_common(tailprob, cfg);

    CLI::App* rvalue = app.add_subcommand("rvalue", "compute r-values and ranks");
    add_common(rvalue, cfg);
    rvalue->add_option("--dump-lambda", cfg.dump_lambda_path, "also write the lambda curve CSV");
    rvalue->add_option("--dump-v", cfg.dump_v_path, "also write the V matrix CSV");

    CLI::App* rank = app.add_subcommand("rank", "full ranking table, one column per method");
    add_common(rank, cfg);
    rank->add_option("--dump-lambda", cfg.dump_lambda_path, "also write the lambda curve CSV");
    rank->add_option("--dump-v", cfg.dump_v_path, "also write the V matrix CSV");

    CLI::App* curves = app.add_subcommand("curves", "threshold-curve CSV for plotting");
    add_common(curves, cfg);
    curves->add_option("--alphas", cfg.alphas, "alpha list")->delimiter(',');
    curves->add_option("--sigma2-min", cfg.sigma2_min)->default_val(0.01);
    curves->add_option("--sigma2-max", cfg.sigma2_max)->default_val(10.0);
    curves->add_option("--sigma2-count", cfg.sigma2_count)->default_val(50);
    curves->add_flag("--standardized", cfg.standardized,
                     "emit thresholds on the standardized (mu=0, tau2=1) scale");

    CLI::App* bench = app.add_subcommand("bench", "Monte-Carlo studies");
    bench->add_option("--study", cfg.study, "enrichment|agreement|validation")->required();
    bench->add_option("--config", cfg.bench_config_path, "study config JSON")->required();
    bench->add_option("--seed", cfg.seed, "seed (overridden by config file seed)")
        ->default_val(1);
    bench->add_option("--out", cfg.out_path, "report CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    cfg.subcommand = app.get_subcommands().front()->get_name();
    try {
        const rankval::RunArtifacts art = rankval::run_pipeline(cfg);
        for (const auto& w : art.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& f : art.files_written) std::cout << f << "\n";
        return 0;
    } catch (const rankval::UsageError& e) {
        return error_json("Usage", e.what(), 2);
    } catch (const rankval::DataError& e) {
        return error_json(e.code(), e.what(), 3);
    } catch (const rankval::NumericError& e) {
        return error_json(e.code(), e.what(), 4);
    } catch (const rankval::QuadratureFailure& e) {
        return error_json("QuadratureFailure", e.what(), 4);
    } catch (const std::exception& e) {
        return error_json("Internal", e.what(), 4);
    }
}
