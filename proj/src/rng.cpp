#include "scenegen/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace scenegen {

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
    return mix64(seed ^ fnv1a64(label));
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
        throw std::invalid_argument("Rng::uniform_int: empty range");
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        return static_cast<std::int64_t>(next());
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
        draw = next();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::index: n must be positive");
    }
    return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
}

double Rng::uniform_real() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::size_t Rng::weighted(const std::vector<std::uint32_t>& weights) {
    const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
    if (total == 0) {
        throw std::invalid_argument("Rng::weighted: weights sum to zero");
    }
    auto draw = static_cast<std::uint64_t>(uniform_int(0, static_cast<std::int64_t>(total) - 1));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (draw < weights[i]) {
            return i;
        }
        draw -= weights[i];
    }
    return weights.size() - 1;
}

} // namespace scenegen
