#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flucast {

/// SplitMix64 finalizer. Stable across platforms, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

/// Derive an independent stream seed from a base seed and a list of tags.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Thin wrapper around mt19937_64 with platform-stable conversions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    /// Standard normal via Box-Muller (no cached pair, so draws stay aligned).
    double normal();

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace flucast
