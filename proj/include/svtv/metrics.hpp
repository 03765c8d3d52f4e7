#pragma once

#include "svtv/raster.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace svtv {

// Degenerate cases are reported as +inf (zero error) or NaN (0/0), never as a large finite number.
inline constexpr double kInfiniteDb = std::numeric_limits<double>::infinity();
inline constexpr double kUndefinedDb = std::numeric_limits<double>::quiet_NaN();

namespace detail {
inline double ratio_db(double num, double den)
{
    if (den == 0.0) return num == 0.0 ? kUndefinedDb : kInfiniteDb;
    if (num == 0.0) return -kInfiniteDb;
    return 10.0 * std::log10(num / den);
}
} // namespace detail

/// 10 log10( ||Ku - mean(Ku)||^2 / ||g - Ku||^2 )
inline double bsnr(const ImageGrid& g, const ImageGrid& blurred)
{
    require_same_shape(g, blurred, "bsnr");
    const double m = mean(blurred);
    double signal = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        signal += (blurred[i] - m) * (blurred[i] - m);
        noise += (g[i] - blurred[i]) * (g[i] - blurred[i]);
    }
    return detail::ratio_db(signal, noise);
}

/// 10 log10( ||g - u||^2 / ||u* - u||^2 )
inline double isnr(const ImageGrid& g, const ImageGrid& truth, const ImageGrid& restored)
{
    require_same_shape(g, truth, "isnr");
    require_same_shape(restored, truth, "isnr");
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        before += (g[i] - truth[i]) * (g[i] - truth[i]);
        after += (restored[i] - truth[i]) * (restored[i] - truth[i]);
    }
    if (before == 0.0) return kUndefinedDb;
    return detail::ratio_db(before, after);
}

struct QualityReport {
    std::string image;
    std::string variant;
    double bsnr_db = kUndefinedDb;
    double isnr_db = kUndefinedDb;
    double residual_norm = 0.0; // ||K u* - g||_2
    double error_norm = 0.0;    // ||u* - u||_2
};

inline std::string format_db(double db)
{
    if (std::isnan(db)) return "undefined";
    if (std::isinf(db)) return db > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", db);
    return buf;
}

} // namespace svtv
