#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedif/matrix.hpp"
#include "fedif/nn.hpp"
#include "fedif/rng.hpp"

namespace fedif::valuation {

/// Influence bookkeeping across rounds. omega holds the smoothed global
/// influence per client (starts at 0, stays in [0,1] on the standard path);
/// rounds holds one entry per executed round for aggregators that score
/// participants.
struct InfluenceLedger {
    struct RoundEntry {
        int round = 0;
        std::vector<std::size_t> participants;
        std::vector<double> phi;            // round influence (or Shapley score)
        std::vector<double> psi;            // normalized round influence
        std::vector<double> omega_after;    // global influence after the update
        std::vector<double> weights;        // aggregation weights used
        std::vector<double> raw_dot;        // unnormalized update . val-grad
        std::vector<double> delta_sq_norm;  // ||injected noise||^2, 0 when clean
    };

    double gamma = 0.3;
    std::vector<double> omega;       // per client
    std::vector<double> cumulative;  // per client, sum of raw dots (diagnostic)
    std::vector<RoundEntry> rounds;

    InfluenceLedger() = default;
    InfluenceLedger(std::size_t clients, double gamma_)
        : gamma(gamma_), omega(clients, 0.0), cumulative(clients, 0.0) {}
};

/// Mean cross-entropy gradient over the full validation set, accumulated in
/// deterministic batch order. Throws on an empty validation set.
std::vector<double> validation_gradient(std::span<const double> params,
                                        const nn::ModelSpec& spec,
                                        const Matrix& val_features,
                                        std::span<const int> val_labels,
                                        std::size_t batch = 256);

/// Round influence: (delta_w / ||delta_w||) . val_grad, with delta_w the
/// round-start global model minus the client's local model. A zero-norm
/// update scores 0 (warning, not an error).
double round_influence(std::span<const double> delta_w,
                       std::span<const double> val_grad);

/// Min-max rescaling into [0,1]. All-equal (including a single participant)
/// maps everyone to 1.
std::vector<double> minmax_normalize(std::span<const double> phi);

/// Smoothed global influence: participants get (1-gamma)*prev + gamma*psi,
/// non-participants keep their previous value.
double smooth_update(double omega_prev, double psi, double gamma,
                     bool participated);

/// Weights proportional to omega over this round's participants, normalized
/// to sum to 1; all-zero omega falls back to uniform.
std::vector<double> aggregation_weights(std::span<const double> omega);

struct InfluencePair {
    std::vector<double> delta_w;
    std::vector<double> val_grad;
};

/// Unnormalized accumulative influence: sum over participated rounds of
/// delta_w . val_grad.
double cumulative_influence(std::span<const InfluencePair> pairs);

/// Monte-Carlo permutation Shapley scores with validation-accuracy marginals.
/// Coalition value = accuracy of the uniform average of its members' models;
/// the empty coalition is the previous global model. With exhaustive=true all
/// |S|! permutations are enumerated (permutations is ignored).
std::vector<double> mc_shapley_scores(
    const std::vector<std::vector<double>>& updates,
    std::span<const double> prev_global, const nn::ModelSpec& spec,
    const Matrix& val_features, std::span<const int> val_labels,
    std::size_t permutations, rng::StreamRng& rng, bool exhaustive = false);

}  // namespace fedif::valuation
