#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedif/orchestrator.hpp"

namespace fedif::cli {

// Exit codes: 0 success, 1 internal error, 2 invalid config, 3 dataset files
// missing or malformed.

struct RunOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
};

int cmd_run(const RunOptions& opts);

struct SweepOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out/sweep";
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> aggregators;
    std::vector<std::string> attacks;
    std::vector<double> gammas;
};

int cmd_sweep(const SweepOptions& opts);

struct BenchOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out/bench";
    std::vector<std::string> methods = {"fedavg", "fedif", "krum", "mc_shapley"};
};

int cmd_bench_aggregation(const BenchOptions& opts);

struct VerifyOptions {
    std::string out_dir = "out/verify";
    std::uint64_t seed = 1;
    int instances = 100;
};

int cmd_verify(const VerifyOptions& opts);

/// Shared by cmd_run and the sweep/bench cells: executes one simulation and
/// writes manifest, rounds.csv, summary.json and the optional noise report.
sim::RunResult execute_run(const sim::SimConfig& cfg, const std::string& config_hash,
                           const std::string& out_dir);

}  // namespace fedif::cli
