#pragma once

// Test-only oracles, independent of the library's gradient and selection
// code paths: central finite differences, brute-force Krum scoring, and
// exhaustive-subset Shapley values.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fedif/matrix.hpp"
#include "fedif/nn.hpp"

namespace oracles {

/// Central finite differences of the mean batch loss w.r.t. every parameter.
inline std::vector<double> fd_param_grad(std::vector<double> params,
                                         const fedif::nn::ModelSpec& spec,
                                         const fedif::Matrix& batch,
                                         std::span<const int> labels,
                                         double h = 1e-4) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + h;
        const double up = fedif::nn::batch_loss(params, spec, batch, labels);
        params[i] = orig - h;
        const double down = fedif::nn::batch_loss(params, spec, batch, labels);
        params[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Central finite differences of each example's own loss w.r.t. its input.
inline fedif::Matrix fd_input_grad(std::span<const double> params,
                                   const fedif::nn::ModelSpec& spec,
                                   const fedif::Matrix& batch,
                                   std::span<const int> labels,
                                   double h = 1e-4) {
    fedif::Matrix grad(batch.rows, batch.cols);
    for (std::size_t b = 0; b < batch.rows; ++b) {
        fedif::Matrix one(1, batch.cols);
        std::copy(batch.data.begin() + b * batch.cols,
                  batch.data.begin() + (b + 1) * batch.cols, one.data.begin());
        const int label[1] = {labels[b]};
        for (std::size_t c = 0; c < batch.cols; ++c) {
            const double orig = one.at(0, c);
            one.at(0, c) = orig + h;
            const double up = fedif::nn::batch_loss(params, spec, one, label);
            one.at(0, c) = orig - h;
            const double down = fedif::nn::batch_loss(params, spec, one, label);
            one.at(0, c) = orig;
            grad.at(b, c) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

/// Max relative error over coordinates whose reference magnitude exceeds
/// `floor` (tiny coordinates are compared absolutely against the same floor).
inline double max_rel_error(std::span<const double> got,
                            std::span<const double> want,
                            double floor = 1e-8) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double mag = std::abs(want[i]);
        if (mag > floor)
            worst = std::max(worst, std::abs(got[i] - want[i]) / mag);
        else
            worst = std::max(worst, std::abs(got[i] - want[i]) > floor ? 1.0 : 0.0);
    }
    return worst;
}

/// Direct Krum score: sum of squared distances to the m-f-2 nearest others.
inline std::vector<double> krum_scores_bruteforce(
    const std::vector<std::vector<double>>& updates, std::size_t f) {
    const std::size_t m = updates.size();
    const std::size_t neighbors = m - f - 2;
    std::vector<double> scores(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> dists;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < updates[i].size(); ++c) {
                const double d = updates[i][c] - updates[j][c];
                s += d * d;
            }
            dists.push_back(s);
        }
        std::sort(dists.begin(), dists.end());
        for (std::size_t k = 0; k < neighbors; ++k) scores[i] += dists[k];
    }
    return scores;
}

/// Exhaustive Shapley values from a coalition value function over bitmasks
/// (bit i set = player i in the coalition).
template <typename ValueFn>
std::vector<double> shapley_bruteforce(std::size_t players, ValueFn value) {
    auto factorial = [](std::size_t n) {
        double f = 1.0;
        for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
        return f;
    };
    std::vector<double> v(1u << players);
    for (std::size_t mask = 0; mask < v.size(); ++mask) v[mask] = value(mask);

    std::vector<double> shapley(players, 0.0);
    const double n_fact = factorial(players);
    for (std::size_t i = 0; i < players; ++i) {
        for (std::size_t mask = 0; mask < v.size(); ++mask) {
            if (mask & (1u << i)) continue;
            const std::size_t s = static_cast<std::size_t>(__builtin_popcountll(mask));
            const double coeff =
                factorial(s) * factorial(players - s - 1) / n_fact;
            shapley[i] += coeff * (v[mask | (1u << i)] - v[mask]);
        }
    }
    return shapley;
}

}  // namespace oracles
