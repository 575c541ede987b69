#pragma once

// Reproducible random streams.
//
// Every consumer of randomness gets its own std::mt19937_64 seeded from
// (study seed, replicate index, purpose tag) through a splitmix64 mixer, so
// adding or removing a consumer never shifts the draws seen by another one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hyak {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Seed of the stream owned by `tag` within replicate `replicate`.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate,
                                    std::string_view tag) {
    std::uint64_t z = splitmix64(seed);
    z = splitmix64(z ^ splitmix64(replicate + 0x632BE59BD9B4E019ULL));
    return splitmix64(z ^ fnv1a64(tag));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t replicate, std::string_view tag) {
    return Rng(stream_seed(seed, replicate, tag));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline int draw_binomial(Rng& rng, int trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    return std::binomial_distribution<int>(trials, p)(rng);
}

/// Number of successes when drawing `draws` items without replacement from
/// `population` items of which `successes` are marked. Inversion from the
/// lower end of the support using the pmf recurrence.
inline int draw_hypergeometric(Rng& rng, int population, int successes, int draws) {
    const int failures = population - successes;
    const int lo = std::max(0, draws - failures);
    const int hi = std::min(draws, successes);
    if (lo == hi) return lo;

    auto log_choose = [](int n, int k) {
        return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    };
    double pmf = std::exp(log_choose(successes, lo) + log_choose(failures, draws - lo) -
                          log_choose(population, draws));
    double u = uniform01(rng);
    int k = lo;
    while (k < hi) {
        if (u < pmf) return k;
        u -= pmf;
        pmf *= static_cast<double>(successes - k) * (draws - k) /
               (static_cast<double>(k + 1) * (failures - draws + k + 1));
        ++k;
    }
    return hi;
}

}  // namespace hyak
