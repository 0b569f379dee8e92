#pragma once

#include <cstdint>
#include <span>

#include "specscale/error.hpp"

namespace specscale {

/// Counter-based generator: draw i (0-based) of stream `seed` is
/// mix64(seed + (i + 1) * 0x9E3779B97F4A7C15), the SplitMix64 sequence.
/// Any draw can be recomputed from (seed, i) alone, so runs are
/// bit-reproducible across implementations that follow this definition.
class CounterRng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

    static constexpr std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Independent stream keyed by (seed, tag); used to give every cycle and
    /// every stochastic step its own generator.
    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
        return mix64(seed ^ mix64(tag + kGamma));
    }

    constexpr std::uint64_t at(std::uint64_t index) const { return mix64(seed_ + (index + 1) * kGamma); }

    constexpr std::uint64_t next_u64() { return at(counter_++); }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    constexpr std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// Inverse-CDF draw from unnormalized non-negative weights. Zero-weight
/// entries are never returned.
inline int sample_index(std::span<const double> weights, CounterRng& rng) {
    double total = 0;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) {
            total += weights[i];
            last_positive = static_cast<int>(i);
        }
    }
    if (last_positive < 0) throw InvariantViolation("sample_index: no positive weight");
    const double u = rng.next_double() * total;
    double acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return last_positive;
}

}  // namespace specscale
