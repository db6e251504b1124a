#include "fedif/theory.hpp"

#include <algorithm>
#include <cmath>

#include "fedif/util.hpp"

namespace fedif::theory {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LemmaGap lemma1_identity_check(const std::vector<std::vector<double>>& grads,
                               std::span<const double> weights) {
    if (grads.empty() || grads.size() != weights.size())
        throw ShapeError("lemma1_identity_check: need one weight per gradient");
    const std::size_t dim = grads.front().size();
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (std::abs(wsum - 1.0) > 1e-9)
        throw ShapeError("lemma1_identity_check: weights must sum to 1");

    std::vector<double> mean(dim, 0.0);
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (grads[k].size() != dim)
            throw ShapeError("lemma1_identity_check: gradient length mismatch");
        for (std::size_t i = 0; i < dim; ++i) mean[i] += weights[k] * grads[k][i];
    }

    LemmaGap out;
    double mean_sq = 0.0;
    for (double v : mean) mean_sq += v * v;
    double spread = 0.0;
    for (std::size_t k = 0; k < grads.size(); ++k) {
        double g_sq = 0.0, d_sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            g_sq += grads[k][i] * grads[k][i];
            const double diff = grads[k][i] - mean[i];
            d_sq += diff * diff;
        }
        out.lhs += weights[k] * g_sq;
        spread += weights[k] * d_sq;
    }
    out.rhs = spread + mean_sq;
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

NoiseTermReport noise_term_report(const valuation::InfluenceLedger& ledger) {
    NoiseTermReport report;
    std::vector<double> adaptive, uniform;
    for (const auto& entry : ledger.rounds) {
        if (entry.delta_sq_norm.empty() || entry.weights.empty()) continue;
        double total_sq = 0.0;
        for (double d : entry.delta_sq_norm) total_sq += d;
        if (total_sq == 0.0) continue;

        NoiseTermReport::Row row;
        row.round = entry.round;
        for (std::size_t i = 0; i < entry.delta_sq_norm.size(); ++i)
            row.adaptive_sum += entry.weights[i] * entry.delta_sq_norm[i];
        row.uniform_sum =
            total_sq / static_cast<double>(entry.delta_sq_norm.size());
        row.ratio = row.uniform_sum > 0.0 ? row.adaptive_sum / row.uniform_sum : 0.0;
        adaptive.push_back(row.adaptive_sum);
        uniform.push_back(row.uniform_sum);
        report.rows.push_back(row);
    }
    if (!report.rows.empty()) {
        std::size_t le = 0;
        for (const auto& row : report.rows)
            if (row.adaptive_sum <= row.uniform_sum) ++le;
        report.frac_adaptive_le_uniform =
            static_cast<double>(le) / static_cast<double>(report.rows.size());
        report.median_adaptive = median(adaptive);
        report.median_uniform = median(uniform);
    }
    return report;
}

}  // namespace fedif::theory
