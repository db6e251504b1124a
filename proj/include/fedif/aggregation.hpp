#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fedif::aggregation {

enum class AggregatorKind { fedavg, fedif, krum, mc_shapley, fedprox };

AggregatorKind aggregator_from_name(const std::string& name);
std::string aggregator_name(AggregatorKind kind);

/// FedIF ablation toggles: local weight normalization, round (min-max)
/// normalization, smooth update.
struct FedifFlags {
    bool weight_normalization = true;
    bool round_normalization = true;
    bool smooth_update = true;
};

struct AggregatorConfig {
    AggregatorKind kind = AggregatorKind::fedavg;
    bool size_weighted = false;  // fedavg: weight by local dataset size
    FedifFlags fedif;
    int krum_f = -1;             // -1: auto (floor(n_level*m) under attack, else 1)
    double fedprox_mu = 0.01;

    void validate() const;
};

/// Mean of updates, weighted by local dataset sizes when given (uniform when
/// sizes is empty).
std::vector<double> aggregate_fedavg(const std::vector<std::vector<double>>& updates,
                                     std::span<const std::size_t> sizes = {});

/// Convex combination; weights must be nonnegative and sum to 1.
std::vector<double> aggregate_weighted(const std::vector<std::vector<double>>& updates,
                                       std::span<const double> weights);

/// Index of the update minimizing the summed squared distance to its
/// m - f - 2 nearest neighbors; ties break to the lowest index. Requires
/// m > 2f + 2.
std::size_t krum_index(const std::vector<std::vector<double>>& updates,
                       std::size_t f);

std::vector<double> aggregate_krum(const std::vector<std::vector<double>>& updates,
                                   std::size_t f);

/// Proximal penalty (mu/2)*||w - w_global||^2 and its gradient mu*(w - w_global).
std::pair<double, std::vector<double>> local_prox_term(
    std::span<const double> w, std::span<const double> w_global, double mu);

}  // namespace fedif::aggregation
