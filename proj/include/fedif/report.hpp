#pragma once

#include <string>
#include <vector>

#include "fedif/orchestrator.hpp"

namespace fedif::report {

/// Column order of rounds.csv. Per-participant vectors are JSON-encoded
/// cells keyed by client id; wall-time columns are not covered by the
/// determinism contract.
const std::vector<std::string>& rounds_csv_columns();
const std::vector<std::string>& nondeterministic_columns();

std::string rounds_csv_header();
std::string round_record_csv_row(const sim::RoundRecord& rec);

std::string manifest_json(const sim::SimConfig& cfg, const std::string& config_hash,
                          const std::string& out_dir);
std::string summary_json(const sim::SimConfig& cfg, const sim::RunResult& result);
std::string noise_report_json(const theory::NoiseTermReport& report);

/// Resolved SimConfig as a JSON object string (used by the manifest).
std::string sim_config_json(const sim::SimConfig& cfg);

}  // namespace fedif::report
