#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace svtv {

/// Counter-based generator "splitmix64-ctr/v1": every draw is a pure
/// function of (seed, stream, counter), so per-pixel noise can be generated
/// in any order and reproduced from the seed alone.
///
/// bits = splitmix64_finalize(seed ^ splitmix64_finalize(stream * 0x9E3779B97F4A7C15 + counter))
class CounterRng {
public:
    static constexpr const char* name = "splitmix64-ctr/v1";

    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const
    {
        return finalize(seed_ ^ finalize(stream * 0x9E3779B97F4A7C15ULL + counter));
    }

    /// Uniform in the open interval (0,1).
    double uniform(std::uint64_t stream, std::uint64_t counter) const
    {
        return (static_cast<double>(bits(stream, counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal deviate (Box-Muller, cosine branch) from two uniforms.
    double normal(std::uint64_t stream, std::uint64_t index) const
    {
        const double u1 = uniform(stream, 2 * index);
        const double u2 = uniform(stream, 2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Zero-mean, unit-scale Laplace deviate by inverse CDF.
    double laplace(std::uint64_t stream, std::uint64_t index) const
    {
        const double d = uniform(stream, index) - 0.5;
        const double mag = -std::log1p(-2.0 * std::abs(d));
        return d < 0.0 ? -mag : mag;
    }

private:
    static std::uint64_t finalize(std::uint64_t z)
    {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

} // namespace svtv
