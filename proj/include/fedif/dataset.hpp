#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedif/matrix.hpp"

namespace fedif::data {

/// Immutable after load. Features are examples x dims, scaled to [0,1].
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int classes = 0;
    std::string name;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }

    /// Throws on invariant violations (count mismatch, label range, feature range).
    void validate() const;
};

/// Per-client index lists into a parent dataset; pairwise disjoint, covering,
/// every client non-empty.
struct Partition {
    std::vector<std::vector<std::size_t>> client_indices;
    std::size_t clients() const { return client_indices.size(); }
};

struct ValidationSplit {
    std::vector<std::size_t> validation_indices;
    std::vector<std::size_t> test_indices;
};

/// IDX pair loader (Fashion-MNIST distribution format). Accepts plain or
/// gzip-compressed files transparently. Pixels scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CIFAR-10 binary batches (1 label byte + 3072 pixel bytes per record).
Dataset load_cifar10(const std::vector<std::string>& batch_paths);

/// Gaussian clusters, one mean per class, clamped to [0,1]. Examples are
/// grouped by class (class 0 first). Deterministic in seed.
Dataset synth_blobs(int classes, int per_class, int dim, double spread,
                    std::uint64_t seed);

/// Per-class Dirichlet(alpha) allocation of examples to clients, re-drawn
/// until every client holds at least min_size examples.
Partition dirichlet_partition(const Dataset& dataset, std::size_t clients,
                              double alpha, std::uint64_t seed,
                              std::size_t min_size = 5, int max_retries = 100);

/// Reserves `fraction` of the test set (seeded uniform split, no
/// stratification) as the validation set. Index lists are sorted.
ValidationSplit split_validation(const Dataset& test, double fraction,
                                 std::uint64_t seed);

/// Row subset copy.
Dataset take(const Dataset& ds, std::span<const std::size_t> indices,
             std::string name);

/// Class-stratified train/test split for synthetic data.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             double test_fraction,
                                             std::uint64_t seed);

}  // namespace fedif::data
