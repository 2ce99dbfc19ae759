#pragma once

#include <cstdint>
#include <random>

namespace cgemev {

// Counter-based substream derivation: every (master, replicate, stream) triple
// maps to an independent, reproducible mt19937_64 state. Replicates can then be
// scheduled on any number of threads without stream collisions.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
    signal = 1,
    noise = 2,
    probes = 3,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate, Stream stream) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ (0xA0761D6478BD642FULL + replicate));
    h = splitmix64(h ^ (0xE7037ED1A0B428DBULL + static_cast<std::uint64_t>(stream)));
    return h;
}

inline std::mt19937_64 make(std::uint64_t master, std::uint64_t replicate, Stream stream) {
    return std::mt19937_64(derive_seed(master, replicate, stream));
}

} // namespace rng
} // namespace cgemev
