#include "fedif/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fedif/util.hpp"

namespace fedif::io {

namespace {

constexpr char kMagic[4] = {'F', 'I', 'P', 'V'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "param-vector files are little-endian; add byte swapping for "
              "big-endian hosts");

}  // namespace

void save_param_vector(const std::string& path, std::span<const double> params) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    f.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t len = params.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (!f) throw FormatError(path + ": write failed");
}

std::vector<double> load_param_vector(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError(path + ": cannot open file");
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": bad magic at offset 0");
    std::uint32_t version = 0;
    if (!f.read(reinterpret_cast<char*>(&version), 4))
        throw FormatError(path + ": truncated at offset 4");
    if (version != kVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    std::uint64_t len = 0;
    if (!f.read(reinterpret_cast<char*>(&len), 8))
        throw FormatError(path + ": truncated at offset 8");
    std::vector<double> params(len);
    if (!f.read(reinterpret_cast<char*>(params.data()),
                static_cast<std::streamsize>(len * sizeof(double))))
        throw FormatError(path + ": truncated at offset " +
                          std::to_string(16 + f.gcount()));
    return params;
}

}  // namespace fedif::io
