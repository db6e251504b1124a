#include "fedif/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fedif/rng.hpp"
#include "fedif/util.hpp"

namespace fedif::data {

namespace {

// Reads exactly n bytes through zlib (handles both gzip and plain files).
// `offset` tracks the position in the *decompressed* stream for messages.
void gz_read_exact(gzFile f, const std::string& path, unsigned char* dst,
                   std::size_t n, std::size_t& offset) {
    std::size_t got = 0;
    while (got < n) {
        const unsigned chunk = static_cast<unsigned>(
            std::min<std::size_t>(n - got, 1u << 28));
        const int r = gzread(f, dst + got, chunk);
        if (r <= 0)
            throw FormatError(path + ": truncated at offset " +
                              std::to_string(offset + got));
        got += static_cast<std::size_t>(r);
    }
    offset += n;
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

struct GzCloser {
    gzFile f;
    ~GzCloser() {
        if (f) gzclose(f);
    }
};

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

void Dataset::validate() const {
    if (labels.size() != features.rows)
        throw FormatError(name + ": label count " + std::to_string(labels.size()) +
                          " does not match example count " +
                          std::to_string(features.rows));
    if (classes < 1) throw FormatError(name + ": class count must be positive");
    for (int y : labels)
        if (y < 0 || y >= classes)
            throw FormatError(name + ": label out of range: " + std::to_string(y));
    for (double v : features.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw FormatError(name + ": feature value outside [0,1]");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    gzFile imgf = gzopen(images_path.c_str(), "rb");
    if (!imgf) throw FormatError(images_path + ": cannot open file");
    GzCloser img_closer{imgf};
    gzFile lblf = gzopen(labels_path.c_str(), "rb");
    if (!lblf) throw FormatError(labels_path + ": cannot open file");
    GzCloser lbl_closer{lblf};

    std::size_t img_off = 0;
    unsigned char hdr[16];
    gz_read_exact(imgf, images_path, hdr, 16, img_off);
    if (be32(hdr) != kIdxImagesMagic)
        throw FormatError(images_path + ": bad magic at offset 0 (expected 0x00000803)");
    const std::size_t n = be32(hdr + 4);
    const std::size_t rows = be32(hdr + 8);
    const std::size_t cols = be32(hdr + 12);

    std::size_t lbl_off = 0;
    unsigned char lhdr[8];
    gz_read_exact(lblf, labels_path, lhdr, 8, lbl_off);
    if (be32(lhdr) != kIdxLabelsMagic)
        throw FormatError(labels_path + ": bad magic at offset 0 (expected 0x00000801)");
    const std::size_t ln = be32(lhdr + 4);
    if (ln != n)
        throw FormatError(images_path + ": image count " + std::to_string(n) +
                          " does not match label count " + std::to_string(ln));

    Dataset ds;
    ds.name = "idx";
    ds.features = Matrix(n, rows * cols);
    ds.labels.resize(n);
    ds.classes = 10;

    std::vector<unsigned char> buf(rows * cols);
    for (std::size_t i = 0; i < n; ++i) {
        gz_read_exact(imgf, images_path, buf.data(), buf.size(), img_off);
        double* out = ds.features.data.data() + i * ds.features.cols;
        for (std::size_t j = 0; j < buf.size(); ++j)
            out[j] = static_cast<double>(buf[j]) / 255.0;
    }
    std::vector<unsigned char> lbuf(n);
    gz_read_exact(lblf, labels_path, lbuf.data(), n, lbl_off);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = lbuf[i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    if (max_label >= ds.classes) ds.classes = max_label + 1;
    return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
    constexpr std::size_t kRecord = 1 + 3072;
    if (batch_paths.empty())
        throw FormatError("load_cifar10: no batch files given");

    Dataset ds;
    ds.name = "cifar10";
    ds.classes = 10;

    std::vector<std::vector<unsigned char>> raw;
    std::size_t total = 0;
    for (const auto& path : batch_paths) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw FormatError(path + ": cannot open file");
        std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(f),
                                         std::istreambuf_iterator<char>()};
        if (bytes.empty() || bytes.size() % kRecord != 0)
            throw FormatError(path + ": truncated record at offset " +
                              std::to_string(bytes.size() - bytes.size() % kRecord));
        total += bytes.size() / kRecord;
        raw.push_back(std::move(bytes));
    }

    ds.features = Matrix(total, 3072);
    ds.labels.resize(total);
    std::size_t row = 0;
    for (std::size_t b = 0; b < raw.size(); ++b) {
        const auto& bytes = raw[b];
        for (std::size_t off = 0; off < bytes.size(); off += kRecord, ++row) {
            const int label = bytes[off];
            if (label < 0 || label >= 10)
                throw FormatError(batch_paths[b] + ": label out of range at offset " +
                                  std::to_string(off));
            ds.labels[row] = label;
            double* out = ds.features.data.data() + row * 3072;
            for (std::size_t j = 0; j < 3072; ++j)
                out[j] = static_cast<double>(bytes[off + 1 + j]) / 255.0;
        }
    }
    return ds;
}

Dataset synth_blobs(int classes, int per_class, int dim, double spread,
                    std::uint64_t seed) {
    if (classes < 1 || per_class < 1 || dim < 1)
        throw FormatError("synth_blobs: classes, per_class and dim must be positive");

    rng::StreamRng means_rng(seed, "blob_means");
    Matrix means(classes, dim);
    for (double& v : means.data) v = means_rng.uniform(0.2, 0.8);

    rng::StreamRng noise_rng(seed, "blob_noise");
    Dataset ds;
    ds.name = "synth_blobs";
    ds.classes = classes;
    ds.features = Matrix(static_cast<std::size_t>(classes) * per_class, dim);
    ds.labels.resize(ds.features.rows);
    std::size_t row = 0;
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i, ++row) {
            double* out = ds.features.data.data() + row * dim;
            const double* m = means.data.data() + static_cast<std::size_t>(c) * dim;
            for (int j = 0; j < dim; ++j)
                out[j] = std::clamp(m[j] + noise_rng.normal(0.0, spread), 0.0, 1.0);
            ds.labels[row] = c;
        }
    }
    return ds;
}

Partition dirichlet_partition(const Dataset& dataset, std::size_t clients,
                              double alpha, std::uint64_t seed,
                              std::size_t min_size, int max_retries) {
    if (clients < 1) throw PartitionError("dirichlet_partition: clients must be >= 1");
    if (!(alpha > 0.0)) throw PartitionError("dirichlet_partition: alpha must be > 0");
    const std::size_t effective_min = std::max<std::size_t>(min_size, 1);

    // Class index pools, in dataset order.
    std::vector<std::vector<std::size_t>> by_class(dataset.classes);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[dataset.labels[i]].push_back(i);

    for (int attempt = 0; attempt < max_retries; ++attempt) {
        Partition part;
        part.client_indices.assign(clients, {});
        for (int c = 0; c < dataset.classes; ++c) {
            auto idxs = by_class[c];
            rng::StreamRng shuffle_rng(seed, "partition_shuffle",
                                       static_cast<std::uint64_t>(c),
                                       static_cast<std::uint64_t>(attempt));
            shuffle_rng.shuffle(idxs);
            rng::StreamRng dir_rng(seed, "partition_dirichlet",
                                   static_cast<std::uint64_t>(c),
                                   static_cast<std::uint64_t>(attempt));
            const auto props = dir_rng.dirichlet_symmetric(alpha, clients);

            // Cumulative rounding keeps counts nonnegative and exactly covering.
            const double n_c = static_cast<double>(idxs.size());
            double cum = 0.0;
            std::size_t prev = 0;
            for (std::size_t k = 0; k < clients; ++k) {
                cum += props[k];
                const std::size_t bound =
                    (k + 1 == clients)
                        ? idxs.size()
                        : std::min<std::size_t>(
                              idxs.size(),
                              static_cast<std::size_t>(std::llround(cum * n_c)));
                for (std::size_t i = prev; i < bound; ++i)
                    part.client_indices[k].push_back(idxs[i]);
                prev = std::max(prev, bound);
            }
        }
        const bool ok = std::all_of(
            part.client_indices.begin(), part.client_indices.end(),
            [&](const auto& v) { return v.size() >= effective_min; });
        if (ok) {
            for (auto& v : part.client_indices) std::sort(v.begin(), v.end());
            return part;
        }
    }
    throw PartitionError(
        "dirichlet_partition: could not give every client >= " +
        std::to_string(effective_min) + " examples after " +
        std::to_string(max_retries) +
        " draws; reduce the client count or min_size, or raise alpha");
}

ValidationSplit split_validation(const Dataset& test, double fraction,
                                 std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("validation fraction must be in [0,1]");
    std::vector<std::size_t> idx(test.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng::StreamRng rng(seed, "validation_split");
    rng.shuffle(idx);
    const auto n_val = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(test.size()) + 0.5));
    ValidationSplit split;
    split.validation_indices.assign(idx.begin(), idx.begin() + n_val);
    split.test_indices.assign(idx.begin() + n_val, idx.end());
    std::sort(split.validation_indices.begin(), split.validation_indices.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    return split;
}

Dataset take(const Dataset& ds, std::span<const std::size_t> indices,
             std::string name) {
    Dataset out;
    out.name = std::move(name);
    out.classes = ds.classes;
    out.features = Matrix(indices.size(), ds.dim());
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = indices[i];
        std::copy(ds.features.data.begin() + src * ds.dim(),
                  ds.features.data.begin() + (src + 1) * ds.dim(),
                  out.features.data.begin() + i * ds.dim());
        out.labels[i] = ds.labels[src];
    }
    return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw ConfigError("test fraction must be in [0,1)");
    std::vector<std::vector<std::size_t>> by_class(ds.classes);
    for (std::size_t i = 0; i < ds.size(); ++i)
        by_class[ds.labels[i]].push_back(i);

    std::vector<std::size_t> train_idx, test_idx;
    for (int c = 0; c < ds.classes; ++c) {
        auto idxs = by_class[c];
        rng::StreamRng rng(seed, "train_test_split", static_cast<std::uint64_t>(c));
        rng.shuffle(idxs);
        const auto n_test = static_cast<std::size_t>(
            std::floor(test_fraction * static_cast<double>(idxs.size()) + 0.5));
        test_idx.insert(test_idx.end(), idxs.begin(), idxs.begin() + n_test);
        train_idx.insert(train_idx.end(), idxs.begin() + n_test, idxs.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {take(ds, train_idx, ds.name + "_train"),
            take(ds, test_idx, ds.name + "_test")};
}

}  // namespace fedif::data
