#pragma once

#include <cstdint>
#include <initializer_list>

namespace srr {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of tags.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(base);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags used across the pipeline.
enum SeedStream : std::uint64_t {
    kPhantomStream = 1,
    kSensStream = 2,
    kMaskStream = 3,
    kNoiseStream = 4,
    kInitStream = 5,
    kShuffleStream = 6,
    kInterpStream = 7,
    kHrMaskStream = 8,
    kHrNoiseStream = 9,
};

}  // namespace srr
