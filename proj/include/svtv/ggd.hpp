#pragma once

#include "svtv/degrade.hpp"
#include "svtv/gradient.hpp"
#include "svtv/raster.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace svtv {

inline constexpr double kDefaultPMin = 0.1;
inline constexpr double kDefaultAlphaMax = 1e4;
inline constexpr std::size_t kDefaultLutSize = 4096;
inline constexpr double kDefaultPrefilterThreshold = 0.4;

/// Generalized Gaussian ratio function Gamma(1/z) Gamma(3/z) / Gamma(2/z)^2,
/// evaluated in log space.
inline double gg_ratio(double z)
{
    if (!(z > 0.0)) throw std::invalid_argument("gg_ratio: argument must be positive");
    return std::exp(std::lgamma(1.0 / z) + std::lgamma(3.0 / z) - 2.0 * std::lgamma(2.0 / z));
}

/// Tabulated gg_ratio on [p_min, 2] for inversion. The table is log-spaced
/// on [p_min, 1] and on [1, 2] so that z = 1 and z = 2 are both nodes.
class RatioLookup {
public:
    RatioLookup(double p_min, std::size_t nodes)
    {
        if (!(p_min > 0.0 && p_min < 2.0)) throw std::invalid_argument("RatioLookup: p_min must lie in (0,2)");
        if (nodes < 256) throw std::invalid_argument("RatioLookup: need at least 256 nodes");

        const auto log_fill = [this](double a, double b, std::size_t intervals, bool include_first) {
            const double la = std::log(a), lb = std::log(b);
            for (std::size_t k = include_first ? 0 : 1; k < intervals; ++k)
                z_.push_back(k == 0 ? a : std::exp(la + (lb - la) * static_cast<double>(k) / static_cast<double>(intervals)));
            z_.push_back(b);
        };
        const std::size_t intervals = nodes - 1;
        if (p_min < 1.0) {
            auto lower = static_cast<std::size_t>(std::lround(static_cast<double>(intervals) * std::log(1.0 / p_min) / std::log(2.0 / p_min)));
            lower = std::clamp<std::size_t>(lower, 1, intervals - 1);
            log_fill(p_min, 1.0, lower, true);
            log_fill(1.0, 2.0, intervals - lower, false);
        } else {
            log_fill(p_min, 2.0, intervals, true);
        }
        h_.reserve(z_.size());
        for (double z : z_) h_.push_back(gg_ratio(z));
        for (std::size_t k = 1; k < h_.size(); ++k)
            if (!(h_[k] < h_[k - 1])) throw std::logic_error("RatioLookup: ratio table is not strictly decreasing");
    }

    double p_min() const { return z_.front(); }
    std::size_t size() const { return z_.size(); }
    const std::vector<double>& nodes() const { return z_; }
    const std::vector<double>& values() const { return h_; }

    /// Shape z in [p_min, 2] with gg_ratio(z) == rho, clamped at both ends.
    double inverse(double rho) const
    {
        if (std::isnan(rho)) return p_min();
        if (rho <= h_.back()) return z_.back();
        if (rho >= h_.front()) return z_.front();
        // h_ is decreasing: first index whose value is < rho.
        const auto it = std::upper_bound(h_.begin(), h_.end(), rho, std::greater<double>());
        const auto hi = static_cast<std::size_t>(it - h_.begin());
        const std::size_t lo = hi - 1;
        const double w = (rho - h_[lo]) / (h_[hi] - h_[lo]);
        return z_[lo] + w * (z_[hi] - z_[lo]);
    }

private:
    std::vector<double> z_;
    std::vector<double> h_;
};

inline RatioLookup build_ratio_lookup(double p_min = kDefaultPMin, std::size_t nodes = kDefaultLutSize)
{
    return RatioLookup(p_min, nodes);
}

/// Per-pixel shape/scale rasters and the window size they were estimated with.
struct ParamMaps {
    ImageGrid p;
    ImageGrid alpha;
    int window = 3;
};

namespace detail {

/// Offsets covered by a window of side s centered at 0; even sides put the
/// extra sample on the trailing side.
inline std::pair<int, int> window_extent(int s) { return {(s - 1) / 2, s - 1 - (s - 1) / 2}; }

inline std::size_t wrap_index(long x, std::size_t n)
{
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((x % m) + m) % m);
}

/// Separable periodic box sum over an s x s window. Direct per-pass sums of
/// nonnegative terms, so all-zero windows give exactly zero.
inline ImageGrid box_sum(const ImageGrid& x, int s)
{
    const auto [before, after] = window_extent(s);
    const std::size_t rows = x.height(), cols = x.width();
    ImageGrid tmp(rows, cols), out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int d = -before; d <= after; ++d) acc += x(r, wrap_index(static_cast<long>(c) + d, cols));
            tmp(r, c) = acc;
        }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int d = -before; d <= after; ++d) acc += tmp(wrap_index(static_cast<long>(r) + d, rows), c);
            out(r, c) = acc;
        }
    return out;
}

inline void check_window(int s)
{
    if (s < 3) throw std::invalid_argument("window size must be at least 3");
}

} // namespace detail

/// Moment-ratio shape estimate over each pixel's periodic s x s window.
inline ImageGrid estimate_p_map(const ImageGrid& m, int s, const RatioLookup& lut)
{
    detail::check_window(s);
    ImageGrid abs_m(m.height(), m.width()), sq(m.height(), m.width());
    for (std::size_t i = 0; i < m.size(); ++i) {
        abs_m[i] = std::abs(m[i]);
        sq[i] = m[i] * m[i];
    }
    const ImageGrid s1 = detail::box_sum(abs_m, s);
    const ImageGrid s2 = detail::box_sum(sq, s);
    const double card = static_cast<double>(s) * static_cast<double>(s);

    ImageGrid p(m.height(), m.width());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (s1[i] == 0.0) {
            p[i] = lut.p_min();
            continue;
        }
        p[i] = lut.inverse(card * s2[i] / (s1[i] * s1[i]));
    }
    return p;
}

/// Closed-form maximum-likelihood scale of a half generalized Gaussian with
/// known shape, over n samples: alpha = ((shape/n) * sum x^shape)^(-1/shape).
inline double hgg_scale_mle(std::span<const double> samples, double shape, double alpha_max = kDefaultAlphaMax)
{
    double acc = 0.0;
    for (double x : samples) acc += std::pow(std::abs(x), shape);
    const double base = shape / static_cast<double>(samples.size()) * acc;
    if (!(base > 0.0)) return alpha_max;
    const double log_alpha = -std::log(base) / shape;
    if (!(log_alpha < std::log(alpha_max))) return alpha_max;
    return std::exp(log_alpha);
}

inline ImageGrid estimate_alpha_map(const ImageGrid& m, const ImageGrid& p, int s,
                                    double alpha_max = kDefaultAlphaMax)
{
    detail::check_window(s);
    require_same_shape(m, p, "estimate_alpha_map");
    const auto [before, after] = detail::window_extent(s);
    const std::size_t rows = m.height(), cols = m.width();
    std::vector<double> window(static_cast<std::size_t>(s) * static_cast<std::size_t>(s));
    ImageGrid alpha(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t k = 0;
            for (int dr = -before; dr <= after; ++dr) {
                const std::size_t rr = detail::wrap_index(static_cast<long>(r) + dr, rows);
                for (int dc = -before; dc <= after; ++dc)
                    window[k++] = m(rr, detail::wrap_index(static_cast<long>(c) + dc, cols));
            }
            alpha(r, c) = hgg_scale_mle(window, p(r, c), alpha_max);
        }
    return alpha;
}

/// Fill each masked pixel with the mean of the unmasked pixels in the
/// smallest odd periodic window whose unmasked fraction reaches p_bar.
inline ImageGrid spn_prefilter(const ImageGrid& g, const Mask& mask, double p_bar = kDefaultPrefilterThreshold)
{
    if (mask.height() != g.height() || mask.width() != g.width())
        throw std::invalid_argument("spn_prefilter: mask dimensions do not match image");
    if (!(p_bar > 0.0 && p_bar <= 1.0)) throw std::invalid_argument("spn_prefilter: threshold must lie in (0,1]");

    const std::size_t n = g.size();
    const std::size_t corrupted = mask.count();
    if (corrupted == 0) return g;
    if (corrupted == n) throw std::invalid_argument("spn_prefilter: every pixel is masked");

    double clean_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (!mask[i]) clean_sum += g[i];
    const double global_mean = clean_sum / static_cast<double>(n - corrupted);

    const std::size_t rows = g.height(), cols = g.width();
    std::size_t max_side = std::min(rows, cols);
    if (max_side % 2 == 0) --max_side;

    ImageGrid out = g;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            if (!mask(r, c)) continue;
            double fill = global_mean;
            for (std::size_t side = 3; side <= max_side; side += 2) {
                const long rad = static_cast<long>(side / 2);
                std::size_t clean = 0;
                double sum = 0.0;
                for (long dr = -rad; dr <= rad; ++dr) {
                    const std::size_t rr = detail::wrap_index(static_cast<long>(r) + dr, rows);
                    for (long dc = -rad; dc <= rad; ++dc) {
                        const std::size_t cc = detail::wrap_index(static_cast<long>(c) + dc, cols);
                        if (!mask(rr, cc)) {
                            ++clean;
                            sum += g(rr, cc);
                        }
                    }
                }
                if (static_cast<double>(clean) >= p_bar * static_cast<double>(side * side)) {
                    fill = sum / static_cast<double>(clean);
                    break;
                }
            }
            out(r, c) = fill;
        }
    return out;
}

struct EstimationOptions {
    int window = 3;
    double p_bar = kDefaultPrefilterThreshold;
    double alpha_max = kDefaultAlphaMax;
};

/// [SPN prefilter] -> gradient magnitude -> p map -> alpha map.
inline ParamMaps estimate_maps(const ImageGrid& g, NoiseKind kind, const Mask* mask, const RatioLookup& lut,
                               const EstimationOptions& opt = {})
{
    if (kind == NoiseKind::Spn && mask == nullptr)
        throw std::invalid_argument("estimate_maps: SPN estimation requires the corruption mask");
    if (kind != NoiseKind::Spn && mask != nullptr)
        throw std::invalid_argument("estimate_maps: a corruption mask is only meaningful for SPN");

    const ImageGrid source = (kind == NoiseKind::Spn) ? spn_prefilter(g, *mask, opt.p_bar) : g;
    const ImageGrid m = grad_magnitude(source);
    ParamMaps maps;
    maps.window = opt.window;
    maps.p = estimate_p_map(m, opt.window, lut);
    maps.alpha = estimate_alpha_map(m, maps.p, opt.window, opt.alpha_max);
    return maps;
}

/// Whole-image moment-ratio shape estimate, used for the global-exponent variant.
inline double estimate_global_p(const ImageGrid& m, const RatioLookup& lut)
{
    double s1 = 0.0, s2 = 0.0;
    for (double x : m.pixels()) {
        s1 += std::abs(x);
        s2 += x * x;
    }
    if (s1 == 0.0) return lut.p_min();
    return lut.inverse(static_cast<double>(m.size()) * s2 / (s1 * s1));
}

} // namespace svtv
