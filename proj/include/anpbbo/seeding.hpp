#pragma once

#include <cstdint>
#include <initializer_list>

namespace anpbbo {

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic sub-seed for a (seed, tag, index...) path. Different paths
/// give statistically independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = mix64(seed);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

namespace seed_tag {
inline constexpr std::uint64_t model_init = 1;
inline constexpr std::uint64_t training = 2;
inline constexpr std::uint64_t selection = 3;
inline constexpr std::uint64_t evaluation = 4;
inline constexpr std::uint64_t initial_design = 5;
} // namespace seed_tag

} // namespace anpbbo
