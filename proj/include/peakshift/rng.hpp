#pragma once

// Deterministic RNG streams.
//
// Every random draw in the library comes from an engine derived from
// (seed, stream, index). A task's randomness therefore depends only on its
// identity, never on which worker ran it or in what order.

#include <cstdint>
#include <random>
#include <string_view>

namespace peakshift {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used to turn stream names into stream ids.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) + index);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                 std::uint64_t index = 0) noexcept {
    return derive_seed(seed, fnv1a64(stream), index);
}

inline Engine make_engine(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index = 0) {
    return Engine(derive_seed(seed, stream, index));
}

inline double uniform01(Engine& eng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

inline double uniform(Engine& eng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
}

inline double normal(Engine& eng, double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(eng);
}

inline bool bernoulli(Engine& eng, double p) {
    return uniform01(eng) < p;
}

}  // namespace peakshift
