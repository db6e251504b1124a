#include <cstdint>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedif/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fedif: deterministic federated-learning simulator with "
                 "influence-based adaptive aggregation"};
    app.require_subcommand(1);

    fedif::cli::RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Execute one simulation from a config file");
    run->add_option("--config", run_opts.config_path, "Config file path")->required();
    run->add_option("--override", run_opts.overrides,
                    "section.key=value override (repeatable)");
    run->add_option("--out-dir", run_opts.out_dir, "Output directory");

    fedif::cli::SweepOptions sweep_opts;
    auto* sweep = app.add_subcommand(
        "sweep", "Run the cross product of seeds x aggregators x attacks x gammas");
    sweep->add_option("--config", sweep_opts.config_path, "Config file path")->required();
    sweep->add_option("--override", sweep_opts.overrides,
                      "section.key=value override (repeatable)");
    sweep->add_option("--out-dir", sweep_opts.out_dir, "Output directory");
    sweep->add_option("--seeds", sweep_opts.seeds, "Seeds to sweep")->delimiter(',');
    sweep->add_option("--aggregators", sweep_opts.aggregators,
                      "Aggregators to sweep")->delimiter(',');
    sweep->add_option("--attacks", sweep_opts.attacks,
                      "Attack kinds to sweep")->delimiter(',');
    sweep->add_option("--gammas", sweep_opts.gammas, "Gamma values to sweep")
        ->delimiter(',');

    fedif::cli::BenchOptions bench_opts;
    auto* bench = app.add_subcommand(
        "bench-aggregation",
        "Time training and aggregation across matched aggregator configs");
    bench->add_option("--config", bench_opts.config_path, "Config file path")->required();
    bench->add_option("--override", bench_opts.overrides,
                      "section.key=value override (repeatable)");
    bench->add_option("--out-dir", bench_opts.out_dir, "Output directory");
    bench->add_option("--methods", bench_opts.methods, "Aggregators to benchmark")
        ->delimiter(',');

    fedif::cli::VerifyOptions verify_opts;
    auto* verify = app.add_subcommand(
        "verify", "Run the analytic-identity and noise-term diagnostics");
    verify->add_option("--out-dir", verify_opts.out_dir, "Output directory");
    verify->add_option("--seed", verify_opts.seed, "Master seed");
    verify->add_option("--instances", verify_opts.instances,
                       "Random instances for the identity check");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return fedif::cli::cmd_run(run_opts);
    if (sweep->parsed()) return fedif::cli::cmd_sweep(sweep_opts);
    if (bench->parsed()) return fedif::cli::cmd_bench_aggregation(bench_opts);
    if (verify->parsed()) return fedif::cli::cmd_verify(verify_opts);
    return 1;
}
