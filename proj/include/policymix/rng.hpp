#pragma once

#include <cstdint>
#include <random>

namespace policymix {

// splitmix64 step; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for substream `index` of a master seed. Streams depend only on
// (master, index), so replicates can run in any order or thread layout
// and still reproduce bit-identically.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t index) {
    return std::mt19937_64(substream_seed(master, index));
}

// Standard-library distribution objects are implementation-defined; these
// fixed algorithms keep seeded output stable across toolchains.

// Unbiased draw from {0, ..., n-1} by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace policymix
