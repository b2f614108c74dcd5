#pragma once

#include <cstdint>
#include <vector>

namespace tornadocast {

/// xoshiro256** seeded through splitmix64. One generator type is used for
/// every random draw in the pipeline so a run is reproducible from its
/// seeds alone, independent of platform or standard-library version.
/// (std::normal_distribution and friends are not bit-stable across
/// implementations, so the mappings below are spelled out.)
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, bound), unbiased (rejection sampling). bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

    /// Standard normal via Box-Muller; pairs are consumed in order.
    double next_normal();

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Deterministic stream splitting: mixes (base, salt) into a fresh seed.
/// Used for per-fold, per-epoch, and per-sample generators.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace tornadocast
