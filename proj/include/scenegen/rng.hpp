#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace scenegen {

/// 64-bit FNV-1a. Stable across platforms, used for labels and shingles.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Sub-seed for a named module, derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

/// Seedable generator with platform-stable sampling helpers. The standard
/// distributions are implementation-defined, so every draw that feeds an
/// output goes through these members instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [lo, hi] (inclusive), rejection sampled.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n);

    /// Uniform real in [0, 1) with 53 bits of precision.
    double uniform_real();

    bool bernoulli(double p) { return uniform_real() < p; }

    /// Draws an index with probability proportional to integer weights.
    std::size_t weighted(const std::vector<std::uint32_t>& weights);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace scenegen
