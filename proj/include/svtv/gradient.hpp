#pragma once

#include "svtv/raster.hpp"

#include <cmath>

namespace svtv {

/// Forward differences with periodic wrap:
///   h(r,c) = u(r, c+1) - u(r,c),  v(r,c) = u(r+1, c) - u(r,c).
inline GradientField grad_forward(const ImageGrid& u)
{
    const std::size_t rows = u.height(), cols = u.width();
    GradientField g(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t rn = (r + 1 == rows) ? 0 : r + 1;
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t cn = (c + 1 == cols) ? 0 : c + 1;
            g.h(r, c) = u(r, cn) - u(r, c);
            g.v(r, c) = u(rn, c) - u(r, c);
        }
    }
    return g;
}

/// Exact adjoint of grad_forward (negative divergence, periodic).
inline ImageGrid div_adjoint(const GradientField& t)
{
    const std::size_t rows = t.height(), cols = t.width();
    ImageGrid out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t rp = (r == 0) ? rows - 1 : r - 1;
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t cp = (c == 0) ? cols - 1 : c - 1;
            out(r, c) = (t.h(r, cp) - t.h(r, c)) + (t.v(rp, c) - t.v(r, c));
        }
    }
    return out;
}

inline ImageGrid grad_magnitude(const GradientField& g)
{
    ImageGrid m(g.height(), g.width());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::hypot(g.h[i], g.v[i]);
    return m;
}

inline ImageGrid grad_magnitude(const ImageGrid& u) { return grad_magnitude(grad_forward(u)); }

} // namespace svtv
