#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fedif/orchestrator.hpp"

namespace fedif::cfg {

/// Flat view of a sectioned key/value config file. Keys are "section.key"
/// (or bare "key" for top-level entries like `aggregator`).
struct ConfigMap {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    void set(std::string key, std::string value) {
        values[std::move(key)] = std::move(value);
    }
};

/// Parses `key = value` lines under optional `[section]` headers. `#` and `;`
/// start comments; values may be double-quoted. Throws ConfigError with the
/// offending line number.
ConfigMap parse_config_text(std::string_view text);

/// Reads and parses a config file; also returns the raw bytes so callers can
/// hash exactly what was read.
ConfigMap load_config_file(const std::string& path, std::string* raw_bytes = nullptr);

/// Applies a single `section.key=value` (or `key=value`) override.
void apply_override(ConfigMap& map, std::string_view assignment);

/// Builds a validated SimConfig; unknown keys and malformed values raise
/// ConfigError naming the key.
sim::SimConfig resolve_sim_config(const ConfigMap& map);

}  // namespace fedif::cfg
