#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedif/matrix.hpp"
#include "fedif/nn.hpp"
#include "fedif/rng.hpp"

namespace fedif::adversary {

enum class AttackKind { none, label_noise, gradient_noise, adversarial };

/// L-infinity PGD parameters.
struct PgdConfig {
    double epsilon = 0.03;
    double step = 0.01;
    int iters = 20;
};

struct AttackConfig {
    AttackKind kind = AttackKind::none;
    double n_level = 0.0;          // fraction of noisy clients
    double n_lower = 0.0;          // per-client noisy-sample fraction bounds
    double n_upper = 0.0;
    double sigma = 0.0;            // gradient-noise std
    double mu = 0.0;               // gradient-noise mean
    PgdConfig pgd;

    void validate() const;  // throws ConfigError naming the field
};

/// Which clients are noisy and how corrupted each one is. The per-client
/// fraction is drawn once at assignment time.
struct AdversaryAssignment {
    std::vector<std::size_t> noisy_ids;   // sorted ascending
    std::vector<double> noise_fraction;   // parallel to noisy_ids

    bool is_noisy(std::size_t id) const;
    double fraction_of(std::size_t id) const;  // 0 for clean clients
};

/// Marks round(n_level * clients) clients (half-up) as noisy; deterministic in seed.
AdversaryAssignment assign_adversaries(std::size_t clients,
                                       const AttackConfig& config,
                                       std::uint64_t seed);

/// Flips exactly floor(fraction * n) labels to a uniformly random different
/// class; remaining labels unchanged.
std::vector<int> flip_labels(std::span<const int> labels, double fraction,
                             int classes, rng::StreamRng& rng);

/// update + N(mu, sigma^2) i.i.d. per coordinate; returns (perturbed, noise).
std::pair<std::vector<double>, std::vector<double>> perturb_update(
    std::span<const double> update, double mu, double sigma,
    rng::StreamRng& rng);

/// L-infinity PGD: signed-gradient ascent from a uniform start in the
/// epsilon-ball, each step projected into the ball and clipped to [0,1].
Matrix pgd_attack(std::span<const double> params, const nn::ModelSpec& spec,
                  const Matrix& batch, std::span<const int> labels,
                  const PgdConfig& pgd, rng::StreamRng& rng);

}  // namespace fedif::adversary
