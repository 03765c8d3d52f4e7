#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace svtv {

/// Row-major d1 x d2 raster of doubles. Used for images, residuals and
/// per-pixel parameter maps alike; intensity images live in [0,1].
class ImageGrid {
public:
    ImageGrid() = default;

    ImageGrid(std::size_t height, std::size_t width, double fill = 0.0)
        : height_(height), width_(width), pixels_(height * width, fill)
    {
        if (height == 0 || width == 0)
            throw std::invalid_argument("ImageGrid: dimensions must be positive");
    }

    ImageGrid(std::size_t height, std::size_t width, std::vector<double> pixels)
        : height_(height), width_(width), pixels_(std::move(pixels))
    {
        if (height == 0 || width == 0)
            throw std::invalid_argument("ImageGrid: dimensions must be positive");
        if (pixels_.size() != height * width)
            throw std::invalid_argument("ImageGrid: pixel count does not match dimensions");
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return pixels_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return pixels_[r * width_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return pixels_[r * width_ + c]; }
    double& operator[](std::size_t i) { return pixels_[i]; }
    double operator[](std::size_t i) const { return pixels_[i]; }

    std::span<double> pixels() & { return pixels_; }
    std::span<const double> pixels() const& { return pixels_; }
    std::span<const double> pixels() && = delete; // would dangle
    const std::vector<double>& data() const { return pixels_; }

    bool same_shape(const ImageGrid& other) const
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    bool in_unit_range() const
    {
        for (double v : pixels_)
            if (!(v >= 0.0 && v <= 1.0)) return false;
        return true;
    }

    bool operator==(const ImageGrid&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> pixels_;
};

/// Per-pixel pair of horizontal and vertical differences, stored as two
/// rasters with the same indexing as the source image.
struct GradientField {
    ImageGrid h;
    ImageGrid v;

    GradientField() = default;
    GradientField(std::size_t height, std::size_t width)
        : h(height, width), v(height, width) {}

    std::size_t height() const { return h.height(); }
    std::size_t width() const { return h.width(); }
    std::size_t size() const { return h.size(); }
};

/// Boolean raster (true = pixel belongs to the corrupted set).
class Mask {
public:
    Mask() = default;
    Mask(std::size_t height, std::size_t width, bool fill = false)
        : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
    bool operator()(std::size_t r, std::size_t c) const { return bits_[r * width_ + c] != 0; }

    std::size_t count() const
    {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
    }

    bool operator==(const Mask&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<unsigned char> bits_;
};

inline void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* where)
{
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

inline double dot(const ImageGrid& a, const ImageGrid& b)
{
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const GradientField& a, const GradientField& b)
{
    return dot(a.h, b.h) + dot(a.v, b.v);
}

inline double norm2(const ImageGrid& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const GradientField& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const ImageGrid& a)
{
    double s = 0.0;
    for (double x : a.pixels()) s += std::abs(x);
    return s;
}

inline double mean(const ImageGrid& a)
{
    return std::accumulate(a.pixels().begin(), a.pixels().end(), 0.0) / static_cast<double>(a.size());
}

/// a + s*b, elementwise.
inline ImageGrid axpy(const ImageGrid& a, double s, const ImageGrid& b)
{
    require_same_shape(a, b, "axpy");
    ImageGrid out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
    return out;
}

inline GradientField axpy(const GradientField& a, double s, const GradientField& b)
{
    GradientField out;
    out.h = axpy(a.h, s, b.h);
    out.v = axpy(a.v, s, b.v);
    return out;
}

inline ImageGrid operator-(const ImageGrid& a, const ImageGrid& b) { return axpy(a, -1.0, b); }
inline ImageGrid operator+(const ImageGrid& a, const ImageGrid& b) { return axpy(a, 1.0, b); }

inline bool all_finite(const ImageGrid& a)
{
    for (double x : a.pixels())
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const GradientField& a) { return all_finite(a.h) && all_finite(a.v); }

} // namespace svtv
