#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fedif::rng {

// Deterministic named-stream RNG. Every random decision in the simulator
// draws from a stream keyed by (master seed, purpose name, id_a, id_b), so
// results are independent of scheduling and identical across runs with the
// same master seed. Distributions are implemented here rather than taken
// from <random> because libstdc++/libc++ disagree on distribution output.
class StreamRng {
public:
    StreamRng(std::uint64_t master_seed, std::string_view name,
              std::uint64_t id_a = 0, std::uint64_t id_b = 0);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n), n >= 1. Unbiased (rejection sampling).
    std::uint64_t uniform_int(std::uint64_t n);

    /// Standard normal via Box-Muller (no cached state).
    double normal();
    double normal(double mean, double stddev);

    /// Gamma(alpha, 1) via Marsaglia-Tsang; alpha > 0.
    double gamma(double alpha);

    /// Dirichlet(alpha, ..., alpha) draw of dimension k; sums to 1.
    std::vector<double> dirichlet_symmetric(double alpha, std::size_t k);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct values sampled uniformly from {0, ..., n-1}, sorted ascending.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t s_[4];
};

}  // namespace fedif::rng
