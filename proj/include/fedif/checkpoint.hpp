#pragma once

#include <span>
#include <string>
#include <vector>

namespace fedif::io {

// Flat parameter-vector file: 4-byte magic "FIPV", u32 version, u64 length,
// then length little-endian f64 values.

void save_param_vector(const std::string& path, std::span<const double> params);
std::vector<double> load_param_vector(const std::string& path);

}  // namespace fedif::io
