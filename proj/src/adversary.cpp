#include "fedif/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "fedif/util.hpp"

namespace fedif::adversary {

void AttackConfig::validate() const {
    if (!(n_level >= 0.0 && n_level <= 1.0))
        throw ConfigError("attack.n_level: must be in [0,1]");
    if (!(n_lower >= 0.0 && n_lower <= n_upper && n_upper <= 1.0))
        throw ConfigError("attack.n_ratio: need 0 <= n_lower <= n_upper <= 1");
    if (sigma < 0.0) throw ConfigError("attack.sigma: must be >= 0");
    if (kind == AttackKind::adversarial) {
        if (!(pgd.epsilon > 0.0)) throw ConfigError("attack.pgd_epsilon: must be > 0");
        if (!(pgd.step > 0.0)) throw ConfigError("attack.pgd_step: must be > 0");
        if (pgd.iters < 1) throw ConfigError("attack.pgd_iters: must be >= 1");
    }
}

bool AdversaryAssignment::is_noisy(std::size_t id) const {
    return std::binary_search(noisy_ids.begin(), noisy_ids.end(), id);
}

double AdversaryAssignment::fraction_of(std::size_t id) const {
    const auto it = std::lower_bound(noisy_ids.begin(), noisy_ids.end(), id);
    if (it == noisy_ids.end() || *it != id) return 0.0;
    return noise_fraction[static_cast<std::size_t>(it - noisy_ids.begin())];
}

AdversaryAssignment assign_adversaries(std::size_t clients,
                                       const AttackConfig& config,
                                       std::uint64_t seed) {
    config.validate();
    AdversaryAssignment a;
    if (config.kind == AttackKind::none || config.n_level == 0.0) return a;

    // Half-up rounding of the noisy-client count.
    const auto count = static_cast<std::size_t>(
        std::floor(config.n_level * static_cast<double>(clients) + 0.5));
    rng::StreamRng rng(seed, "adversary_assign");
    a.noisy_ids = rng.sample_without_replacement(clients, count);
    a.noise_fraction.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        a.noise_fraction.push_back(rng.uniform(config.n_lower, config.n_upper));
    return a;
}

std::vector<int> flip_labels(std::span<const int> labels, double fraction,
                             int classes, rng::StreamRng& rng) {
    if (classes < 2) throw AttackError("flip_labels: need at least 2 classes");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw AttackError("flip_labels: fraction must be in [0,1]");
    std::vector<int> out(labels.begin(), labels.end());
    const auto count = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(labels.size())));
    const auto chosen = rng.sample_without_replacement(labels.size(), count);
    for (const auto i : chosen) {
        // Uniform over the classes-1 other labels.
        const int shift =
            1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(classes - 1)));
        out[i] = (out[i] + shift) % classes;
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> perturb_update(
    std::span<const double> update, double mu, double sigma,
    rng::StreamRng& rng) {
    if (sigma < 0.0) throw AttackError("perturb_update: sigma must be >= 0");
    std::vector<double> noise(update.size(), 0.0);
    std::vector<double> perturbed(update.begin(), update.end());
    if (sigma == 0.0 && mu == 0.0) return {std::move(perturbed), std::move(noise)};
    for (std::size_t i = 0; i < update.size(); ++i) {
        noise[i] = rng.normal(mu, sigma);
        perturbed[i] += noise[i];
    }
    return {std::move(perturbed), std::move(noise)};
}

Matrix pgd_attack(std::span<const double> params, const nn::ModelSpec& spec,
                  const Matrix& batch, std::span<const int> labels,
                  const PgdConfig& pgd, rng::StreamRng& rng) {
    if (!(pgd.epsilon > 0.0) || !(pgd.step > 0.0))
        throw AttackError("pgd_attack: epsilon and step must be > 0");
    if (pgd.iters < 0) throw AttackError("pgd_attack: iters must be >= 0");

    Matrix x = batch;
    for (std::size_t i = 0; i < x.data.size(); ++i)
        x.data[i] = std::clamp(x.data[i] + rng.uniform(-pgd.epsilon, pgd.epsilon),
                               0.0, 1.0);

    for (int it = 0; it < pgd.iters; ++it) {
        const Matrix g = nn::loss_input_grad(params, spec, x, labels);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double s =
                g.data[i] > 0.0 ? 1.0 : (g.data[i] < 0.0 ? -1.0 : 0.0);
            double v = x.data[i] + pgd.step * s;
            v = std::clamp(v, batch.data[i] - pgd.epsilon,
                           batch.data[i] + pgd.epsilon);
            x.data[i] = std::clamp(v, 0.0, 1.0);
        }
    }
    return x;
}

}  // namespace fedif::adversary
