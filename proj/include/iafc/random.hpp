#pragma once

#include <cstdint>
#include <random>

namespace iafc {

/// Seeded uniform stream. The engine and the conversion to double are fully
/// specified, so a given seed yields the same draws on every platform.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Stream for one Monte-Carlo trial, derived from (master seed, trial index).
    static RandomStream for_trial(std::uint64_t master_seed, std::uint64_t trial)
    {
        return RandomStream(mix(mix(master_seed) ^ (trial + 0x632be59bd9b4e019ULL)));
    }

    /// Uniform on [0, 1) with 53 random bits.
    double unit()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform on [-half_width, +half_width].
    double symmetric(double half_width) { return uniform(-half_width, half_width); }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z)
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace iafc
