#pragma once

#include <cstdint>
#include <random>

namespace schelling {

/// Version of the random stream layout. Bump whenever the engine, the
/// conversion routines below or the order of draws in the simulator change.
inline constexpr int kRngStreamVersion = 1;

/// Seeded random source for one trajectory.
///
/// The raw engine is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform, bounded-integer and exponential variates are derived
/// here instead of through <random> distributions, whose algorithms differ
/// between standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform on {0, ..., n-1}; n must be positive. Unbiased (Lemire's method).
    std::uint64_t uniform_below(std::uint64_t n);

    /// Exponential variate with the given rate (> 0); never zero.
    double exponential(double rate);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replicate `index` under `base_seed`. Depends only on the pair.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

} // namespace schelling
