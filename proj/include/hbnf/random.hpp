#pragma once

#include <cstdint>

namespace hbnf {

/// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Counter-based stream: the value depends only on (seed, stream, counter),
/// so draws can be generated out of order or in parallel.
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

/// Uniform in [0, 1) with 53 random bits.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return static_cast<double>(counter_bits(seed, stream, counter) >> 11) * 0x1.0p-53;
}

/// Child seed for an independent sub-experiment (e.g. Monte-Carlo sample i).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t child) {
    return splitmix64(seed ^ splitmix64(child + 0xD1B54A32D192ED03ull));
}

}  // namespace hbnf
