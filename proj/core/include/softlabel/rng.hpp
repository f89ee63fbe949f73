#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace softlabel {

/// Seeded generator with platform-independent derived draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std::*_distribution adaptors are not, so bounded integers and unit reals are
/// derived here directly. Every reproducibility guarantee in the library
/// (sampling, shuffles, dropout masks, initialization) routes through this type.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent child stream, e.g. for one epoch or one fold.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace softlabel
