#include "fedif/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedif/util.hpp"

namespace fedif::valuation {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::vector<double> validation_gradient(std::span<const double> params,
                                        const nn::ModelSpec& spec,
                                        const Matrix& val_features,
                                        std::span<const int> val_labels,
                                        std::size_t batch) {
    if (val_features.rows == 0)
        throw ShapeError("validation_gradient: empty validation set");
    if (val_labels.size() != val_features.rows)
        throw ShapeError("validation_gradient: label count mismatch");

    const double total = static_cast<double>(val_features.rows);
    std::vector<double> acc(params.size(), 0.0);
    std::vector<double> grad;
    for (std::size_t start = 0; start < val_features.rows; start += batch) {
        const std::size_t n = std::min(batch, val_features.rows - start);
        Matrix chunk(n, val_features.cols);
        std::copy(val_features.data.begin() + start * val_features.cols,
                  val_features.data.begin() + (start + n) * val_features.cols,
                  chunk.data.begin());
        nn::loss_and_param_grad(params, spec, chunk,
                                val_labels.subspan(start, n), grad);
        const double w = static_cast<double>(n) / total;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * grad[i];
    }
    return acc;
}

double round_influence(std::span<const double> delta_w,
                       std::span<const double> val_grad) {
    if (delta_w.size() != val_grad.size())
        throw ShapeError("round_influence: length mismatch");
    double norm_sq = 0.0;
    for (double v : delta_w) norm_sq += v * v;
    if (norm_sq == 0.0) {
        util::warn("round_influence: zero-norm update (stalled client), scoring 0");
        return 0.0;
    }
    return dot(delta_w, val_grad) / std::sqrt(norm_sq);
}

std::vector<double> minmax_normalize(std::span<const double> phi) {
    if (phi.empty()) throw ShapeError("minmax_normalize: empty input");
    const auto [lo_it, hi_it] = std::minmax_element(phi.begin(), phi.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> psi(phi.size());
    if (hi == lo) {
        // Indistinguishable participants are treated as equally trustworthy.
        std::fill(psi.begin(), psi.end(), 1.0);
        return psi;
    }
    for (std::size_t i = 0; i < phi.size(); ++i)
        psi[i] = (phi[i] - lo) / (hi - lo);
    return psi;
}

double smooth_update(double omega_prev, double psi, double gamma,
                     bool participated) {
    if (!participated) return omega_prev;
    return (1.0 - gamma) * omega_prev + gamma * psi;
}

std::vector<double> aggregation_weights(std::span<const double> omega) {
    if (omega.empty()) throw ShapeError("aggregation_weights: empty input");
    std::vector<double> p(omega.begin(), omega.end());
    // Negative scores can only appear with round normalization ablated;
    // clamp them so the output stays a convex combination.
    for (double& v : p) v = std::max(v, 0.0);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (total <= 0.0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    for (double& v : p) v /= total;
    return p;
}

double cumulative_influence(std::span<const InfluencePair> pairs) {
    double total = 0.0;
    for (const auto& pr : pairs) total += dot(pr.delta_w, pr.val_grad);
    return total;
}

std::vector<double> mc_shapley_scores(
    const std::vector<std::vector<double>>& updates,
    std::span<const double> prev_global, const nn::ModelSpec& spec,
    const Matrix& val_features, std::span<const int> val_labels,
    std::size_t permutations, rng::StreamRng& rng, bool exhaustive) {
    const std::size_t m = updates.size();
    if (m == 0) throw ShapeError("mc_shapley_scores: no participants");
    if (!exhaustive && permutations < 1)
        throw ConfigError("mc_shapley_scores: permutations must be >= 1");
    if (val_features.rows == 0)
        throw ShapeError("mc_shapley_scores: empty validation set");
    for (const auto& u : updates)
        if (u.size() != prev_global.size())
            throw ShapeError("mc_shapley_scores: update length mismatch");

    const double base_acc =
        nn::evaluate(prev_global, spec, val_features, val_labels).accuracy;

    std::vector<double> scores(m, 0.0);
    std::vector<double> running(prev_global.size());
    std::vector<double> coalition_model(prev_global.size());

    std::size_t n_perms = 0;
    auto walk = [&](std::span<const std::size_t> perm) {
        std::fill(running.begin(), running.end(), 0.0);
        double prev_acc = base_acc;
        for (std::size_t j = 0; j < m; ++j) {
            const auto& u = updates[perm[j]];
            for (std::size_t i = 0; i < running.size(); ++i) running[i] += u[i];
            const double inv = 1.0 / static_cast<double>(j + 1);
            for (std::size_t i = 0; i < running.size(); ++i)
                coalition_model[i] = running[i] * inv;
            const double acc =
                nn::evaluate(coalition_model, spec, val_features, val_labels)
                    .accuracy;
            scores[perm[j]] += acc - prev_acc;
            prev_acc = acc;
        }
        ++n_perms;
    };

    if (exhaustive) {
        if (m > 8)
            throw ConfigError(
                "mc_shapley_scores: exhaustive enumeration limited to 8 participants");
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        do {
            walk(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t p = 0; p < permutations; ++p) {
            rng.shuffle(perm);
            walk(perm);
        }
    }

    for (double& s : scores) s /= static_cast<double>(n_perms);
    return scores;
}

}  // namespace fedif::valuation
