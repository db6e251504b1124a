#include "fedif/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedif/util.hpp"

namespace fedif::aggregation {

AggregatorKind aggregator_from_name(const std::string& name) {
    if (name == "fedavg") return AggregatorKind::fedavg;
    if (name == "fedif") return AggregatorKind::fedif;
    if (name == "krum") return AggregatorKind::krum;
    if (name == "mc_shapley") return AggregatorKind::mc_shapley;
    if (name == "fedprox") return AggregatorKind::fedprox;
    throw ConfigError("aggregator: unknown kind '" + name +
                      "' (expected fedavg|fedif|krum|mc_shapley|fedprox)");
}

std::string aggregator_name(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::fedavg: return "fedavg";
        case AggregatorKind::fedif: return "fedif";
        case AggregatorKind::krum: return "krum";
        case AggregatorKind::mc_shapley: return "mc_shapley";
        case AggregatorKind::fedprox: return "fedprox";
    }
    return "?";
}

void AggregatorConfig::validate() const {
    if (fedprox_mu < 0.0) throw ConfigError("aggregation.fedprox_mu: must be >= 0");
}

namespace {

void check_updates(const std::vector<std::vector<double>>& updates) {
    if (updates.empty()) throw ShapeError("aggregate: no updates");
    for (const auto& u : updates)
        if (u.size() != updates.front().size())
            throw ShapeError("aggregate: update length mismatch");
}

}  // namespace

std::vector<double> aggregate_fedavg(const std::vector<std::vector<double>>& updates,
                                     std::span<const std::size_t> sizes) {
    check_updates(updates);
    std::vector<double> weights(updates.size());
    if (sizes.empty()) {
        std::fill(weights.begin(), weights.end(),
                  1.0 / static_cast<double>(updates.size()));
    } else {
        if (sizes.size() != updates.size())
            throw ShapeError("aggregate_fedavg: sizes count mismatch");
        const double total = static_cast<double>(
            std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
        if (total == 0.0) throw ShapeError("aggregate_fedavg: zero total size");
        for (std::size_t i = 0; i < sizes.size(); ++i)
            weights[i] = static_cast<double>(sizes[i]) / total;
    }
    return aggregate_weighted(updates, weights);
}

std::vector<double> aggregate_weighted(const std::vector<std::vector<double>>& updates,
                                       std::span<const double> weights) {
    check_updates(updates);
    if (weights.size() != updates.size())
        throw ShapeError("aggregate_weighted: weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ShapeError("aggregate_weighted: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ShapeError("aggregate_weighted: weights must sum to 1");

    std::vector<double> out(updates.front().size(), 0.0);
    for (std::size_t k = 0; k < updates.size(); ++k) {
        const double w = weights[k];
        if (w == 0.0) continue;
        const auto& u = updates[k];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * u[i];
    }
    return out;
}

std::size_t krum_index(const std::vector<std::vector<double>>& updates,
                       std::size_t f) {
    check_updates(updates);
    const std::size_t m = updates.size();
    if (m <= 2 * f + 2)
        throw ConfigError("krum: need participants > 2f + 2 (got m=" +
                          std::to_string(m) + ", f=" + std::to_string(f) + ")");
    const std::size_t neighbors = m - f - 2;

    // Pairwise squared distances.
    std::vector<std::vector<double>> d2(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < updates[i].size(); ++c) {
                const double diff = updates[i][c] - updates[j][c];
                s += diff * diff;
            }
            d2[i][j] = d2[j][i] = s;
        }
    }

    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> row;
        row.reserve(m - 1);
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) row.push_back(d2[i][j]);
        std::nth_element(row.begin(), row.begin() + neighbors - 1, row.end());
        double score = 0.0;
        for (std::size_t j = 0; j < neighbors; ++j) score += row[j];
        if (i == 0 || score < best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

std::vector<double> aggregate_krum(const std::vector<std::vector<double>>& updates,
                                   std::size_t f) {
    return updates[krum_index(updates, f)];
}

std::pair<double, std::vector<double>> local_prox_term(
    std::span<const double> w, std::span<const double> w_global, double mu) {
    if (w.size() != w_global.size())
        throw ShapeError("local_prox_term: length mismatch");
    std::vector<double> grad(w.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double diff = w[i] - w_global[i];
        grad[i] = mu * diff;
        sq += diff * diff;
    }
    return {0.5 * mu * sq, std::move(grad)};
}

}  // namespace fedif::aggregation
