#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fdo {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive statistically independent stream
/// seeds from a base seed and a list of counters.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the stream identified by (seed, counters...). Results do not
/// depend on the order in which streams are consumed, so replications can be
/// run in any order or in parallel.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = mix64(seed);
    for (auto c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    return Rng(derive_seed(seed, counters));
}

} // namespace fdo
