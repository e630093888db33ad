#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace s2s {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stable seed for a tuple of identifiers, e.g. (root_seed, phantom_id, instance_index).
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x5332535345454453ull;
    for (std::uint64_t p : parts) {
        h = mix64(h ^ mix64(p));
    }
    return h;
}

} // namespace s2s
