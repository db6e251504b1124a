#pragma once

#include <span>
#include <vector>

#include "fedif/valuation.hpp"

namespace fedif::theory {

/// Both sides of the exact weighted-variance decomposition
/// sum_i p_i ||g_i||^2 = sum_i p_i ||g_i - g_bar||^2 + ||g_bar||^2
/// with g_bar = sum_i p_i g_i, plus their absolute gap.
struct LemmaGap {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
};

LemmaGap lemma1_identity_check(const std::vector<std::vector<double>>& grads,
                               std::span<const double> weights);

/// Per-round comparison of the weighted noise term sum_i p_i ||delta_i||^2
/// under the ledger's adaptive weights versus uniform weights. Rows exist
/// only for rounds with injected noise.
struct NoiseTermReport {
    struct Row {
        int round = 0;
        double adaptive_sum = 0.0;
        double uniform_sum = 0.0;
        double ratio = 0.0;  // adaptive / uniform (0 when uniform is 0)
    };

    std::vector<Row> rows;
    double frac_adaptive_le_uniform = 0.0;
    double median_adaptive = 0.0;
    double median_uniform = 0.0;

    bool empty() const { return rows.empty(); }
};

NoiseTermReport noise_term_report(const valuation::InfluenceLedger& ledger);

}  // namespace fedif::theory
