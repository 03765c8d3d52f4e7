#pragma once

#include "svtv/metrics.hpp"
#include "svtv/raster.hpp"
#include "svtv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace svtv {

enum class NoiseKind { Awgn, Awln, Spn };

inline std::string to_string(NoiseKind k)
{
    switch (k) {
    case NoiseKind::Awgn: return "awgn";
    case NoiseKind::Awln: return "awln";
    case NoiseKind::Spn: return "spn";
    }
    return "?";
}

inline NoiseKind parse_noise_kind(const std::string& s)
{
    if (s == "awgn" || s == "AWGN") return NoiseKind::Awgn;
    if (s == "awln" || s == "AWLN") return NoiseKind::Awln;
    if (s == "spn" || s == "SPN") return NoiseKind::Spn;
    throw std::invalid_argument("unknown noise kind '" + s + "'");
}

/// level is sigma (AWGN), the Laplace scale (AWLN) or the corruption
/// probability gamma (SPN).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Awgn;
    double level = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> target_bsnr;

    void validate() const
    {
        if (kind == NoiseKind::Spn) {
            if (!(level >= 0.0 && level <= 1.0))
                throw std::invalid_argument("NoiseSpec: SPN probability must lie in [0,1]");
        } else if (!target_bsnr && !(level >= 0.0)) {
            throw std::invalid_argument("NoiseSpec: noise level must be nonnegative");
        }
    }
};

struct CorruptionRecord {
    ImageGrid observed;
    ImageGrid blurred;
    Mask mask; // corrupted set for SPN, empty otherwise
    NoiseKind kind = NoiseKind::Awgn;
    double level = 0.0; // realized sigma / Laplace scale / gamma
    std::uint64_t seed = 0;
    double realized_bsnr = kUndefinedDb;
    double realized_fraction = 0.0; // SPN only

    bool operator==(const CorruptionRecord&) const = default;
};

namespace noise_stream {
inline constexpr std::uint64_t gaussian = 1;
inline constexpr std::uint64_t laplace = 2;
inline constexpr std::uint64_t spn_hit = 3;
inline constexpr std::uint64_t spn_value = 4;
} // namespace noise_stream

inline CorruptionRecord add_awgn(const ImageGrid& blurred, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0)) throw std::invalid_argument("add_awgn: sigma must be nonnegative");
    const CounterRng rng(seed);
    CorruptionRecord rec{blurred, blurred, {}, NoiseKind::Awgn, sigma, seed};
    for (std::size_t i = 0; i < blurred.size(); ++i)
        rec.observed[i] = blurred[i] + sigma * rng.normal(noise_stream::gaussian, i);
    rec.realized_bsnr = bsnr(rec.observed, blurred);
    return rec;
}

inline CorruptionRecord add_awln(const ImageGrid& blurred, double scale, std::uint64_t seed)
{
    if (!(scale >= 0.0)) throw std::invalid_argument("add_awln: scale must be nonnegative");
    const CounterRng rng(seed);
    CorruptionRecord rec{blurred, blurred, {}, NoiseKind::Awln, scale, seed};
    for (std::size_t i = 0; i < blurred.size(); ++i)
        rec.observed[i] = blurred[i] + scale * rng.laplace(noise_stream::laplace, i);
    rec.realized_bsnr = bsnr(rec.observed, blurred);
    return rec;
}

inline CorruptionRecord add_spn(const ImageGrid& blurred, double gamma, std::uint64_t seed)
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("add_spn: gamma must lie in [0,1]");
    const CounterRng rng(seed);
    CorruptionRecord rec{blurred, blurred, Mask(blurred.height(), blurred.width()), NoiseKind::Spn, gamma, seed};
    for (std::size_t i = 0; i < blurred.size(); ++i) {
        if (rng.uniform(noise_stream::spn_hit, i) < gamma) {
            rec.mask.set(i, true);
            rec.observed[i] = rng.uniform(noise_stream::spn_value, i) < 0.5 ? 0.0 : 1.0;
        }
    }
    rec.realized_fraction = static_cast<double>(rec.mask.count()) / static_cast<double>(blurred.size());
    rec.realized_bsnr = bsnr(rec.observed, blurred);
    return rec;
}

/// sigma such that the expected BSNR of additive noise of that std equals target_db.
inline double calibrate_sigma_for_bsnr(const ImageGrid& blurred, double target_db)
{
    const auto px = blurred.pixels();
    if (std::all_of(px.begin(), px.end(), [&](double x) { return x == px.front(); }))
        throw std::invalid_argument("calibrate_sigma_for_bsnr: blurred image is constant");
    const double m = mean(blurred);
    double energy = 0.0;
    for (double x : px) energy += (x - m) * (x - m);
    if (energy == 0.0) throw std::invalid_argument("calibrate_sigma_for_bsnr: blurred image is constant");
    const double n = static_cast<double>(blurred.size());
    return std::sqrt(energy / (n * std::pow(10.0, target_db / 10.0)));
}

inline CorruptionRecord corrupt(const ImageGrid& blurred, const NoiseSpec& spec)
{
    spec.validate();
    switch (spec.kind) {
    case NoiseKind::Awgn: {
        const double sigma = spec.target_bsnr ? calibrate_sigma_for_bsnr(blurred, *spec.target_bsnr) : spec.level;
        return add_awgn(blurred, sigma, spec.seed);
    }
    case NoiseKind::Awln: {
        // Var = 2 b^2 for Laplace scale b.
        const double scale = spec.target_bsnr
            ? calibrate_sigma_for_bsnr(blurred, *spec.target_bsnr) / std::numbers::sqrt2
            : spec.level;
        return add_awln(blurred, scale, spec.seed);
    }
    case NoiseKind::Spn: return add_spn(blurred, spec.level, spec.seed);
    }
    throw std::logic_error("corrupt: unreachable");
}

/// Noise standard deviation implied by a record (used for the discrepancy level).
inline double noise_std(const CorruptionRecord& rec)
{
    switch (rec.kind) {
    case NoiseKind::Awgn: return rec.level;
    case NoiseKind::Awln: return rec.level * std::numbers::sqrt2;
    case NoiseKind::Spn: return 0.0;
    }
    return 0.0;
}

} // namespace svtv
