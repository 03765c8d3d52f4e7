#pragma once

#include "svtv/raster.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace svtv {

/// Piecewise-constant pattern: background, rectangles, a disk and a
/// triangle at several gray levels. Geometry scales with the raster size.
inline ImageGrid geometric_image(std::size_t size = 64)
{
    if (size < 8) throw std::invalid_argument("geometric_image: size must be at least 8");
    const double n = static_cast<double>(size);
    ImageGrid img(size, size, 0.2);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
            const double y = (static_cast<double>(r) + 0.5) / n;
            const double x = (static_cast<double>(c) + 0.5) / n;
            double v = 0.2;
            if (x > 0.08 && x < 0.45 && y > 0.10 && y < 0.40) v = 0.85;
            if (x > 0.18 && x < 0.32 && y > 0.18 && y < 0.30) v = 0.05;
            const double dx = x - 0.70, dy = y - 0.30;
            if (dx * dx + dy * dy < 0.19 * 0.19) v = 0.55;
            // triangle with vertices (0.15,0.9) (0.5,0.9) (0.32,0.55)
            if (y < 0.9 && y > 0.55 + std::abs(x - 0.32) * (0.35 / 0.18)) v = 1.0;
            if (x > 0.60 && x < 0.92 && y > 0.62 && y < 0.88) v = 0.40;
            if (x > 0.70 && x < 0.82 && y > 0.68 && y < 0.80) v = 0.70;
            img(r, c) = v;
        }
    return img;
}

/// Vertical stripes of varying width and level, with a horizontally striped band.
inline ImageGrid texture_image(std::size_t size = 64)
{
    if (size < 8) throw std::invalid_argument("texture_image: size must be at least 8");
    ImageGrid img(size, size);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
            const std::size_t period = 2 + (c * 6) / size;
            double v = ((c / period) % 2 == 0) ? 0.25 : 0.75;
            if (r >= size / 3 && r < (2 * size) / 3) v = ((r / 3) % 2 == 0) ? 0.1 : 0.9;
            img(r, c) = v;
        }
    return img;
}

/// Linear ramp along both axes, values in [0,1].
inline ImageGrid ramp_image(std::size_t rows, std::size_t cols)
{
    ImageGrid img(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            img(r, c) = 0.5 * (static_cast<double>(r) / static_cast<double>(rows - 1 ? rows - 1 : 1) +
                               static_cast<double>(c) / static_cast<double>(cols - 1 ? cols - 1 : 1));
    return img;
}

inline ImageGrid synthetic_image(const std::string& name, std::size_t size)
{
    if (name == "geometric") return geometric_image(size);
    if (name == "texture") return texture_image(size);
    if (name == "ramp") return ramp_image(size, size);
    throw std::invalid_argument("unknown synthetic image '" + name + "'");
}

} // namespace svtv
