#pragma once

#include "svtv/fft.hpp"
#include "svtv/raster.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace svtv {

/// Truncated, unit-sum Gaussian point spread function on a band x band support.
struct BlurKernel {
    int band = 1;
    double sigma = 1.0;
    std::vector<double> weights; // band*band, row-major, center at (band/2, band/2)

    int radius() const { return band / 2; }
    double at(int dr, int dc) const
    {
        return weights[static_cast<std::size_t>((dr + radius()) * band + (dc + radius()))];
    }
};

inline BlurKernel make_gaussian_psf(int band, double sigma)
{
    if (band < 1 || band % 2 == 0)
        throw std::invalid_argument("make_gaussian_psf: band must be a positive odd integer");
    if (!(sigma > 0.0))
        throw std::invalid_argument("make_gaussian_psf: sigma must be positive");

    BlurKernel k;
    k.band = band;
    k.sigma = sigma;
    k.weights.resize(static_cast<std::size_t>(band * band));
    const int rad = band / 2;
    double total = 0.0;
    for (int a = -rad; a <= rad; ++a)
        for (int b = -rad; b <= rad; ++b) {
            const double w = std::exp(-(a * a + b * b) / (2.0 * sigma * sigma));
            k.weights[static_cast<std::size_t>((a + rad) * band + (b + rad))] = w;
            total += w;
        }
    for (double& w : k.weights) w /= total;
    return k;
}

inline BlurKernel identity_kernel() { return make_gaussian_psf(1, 1.0); }

/// DFT eigenvalues of the periodic blur and difference operators for one
/// image size, plus the cached denominator of the u-update normal equations:
///   |F(D_h)|^2 + |F(D_v)|^2 + beta_ratio * |F(K)|^2.
struct BlurSpectrum {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double beta_ratio = 1.0;
    BlurKernel kernel;
    Fft2d fft{1, 1};
    ComplexRaster k_hat;
    ComplexRaster dh_hat;
    ComplexRaster dv_hat;
    std::vector<double> denominator;
};

inline BlurSpectrum spectrum_of(const BlurKernel& kernel, std::size_t rows, std::size_t cols,
                                double beta_ratio)
{
    if (static_cast<std::size_t>(kernel.band) > std::min(rows, cols))
        throw std::invalid_argument("spectrum_of: kernel larger than image");
    if (!(beta_ratio > 0.0))
        throw std::invalid_argument("spectrum_of: beta ratio must be positive");

    BlurSpectrum s;
    s.rows = rows;
    s.cols = cols;
    s.beta_ratio = beta_ratio;
    s.kernel = kernel;
    s.fft = Fft2d(rows, cols);

    // Kernel centered at the origin with periodic wrap.
    ImageGrid k(rows, cols);
    const int rad = kernel.radius();
    const auto wrap = [](int x, std::size_t n) {
        const int m = static_cast<int>(n);
        return static_cast<std::size_t>(((x % m) + m) % m);
    };
    for (int a = -rad; a <= rad; ++a)
        for (int b = -rad; b <= rad; ++b) k(wrap(a, rows), wrap(b, cols)) += kernel.at(a, b);
    s.k_hat = s.fft.forward(k);

    // (D_h u)(r,c) = u(r,c+1) - u(r,c) is convolution with -1 at (0,0) and +1 at (0,-1).
    ImageGrid dh(rows, cols), dv(rows, cols);
    dh(0, 0) -= 1.0;
    dh(0, wrap(-1, cols)) += 1.0;
    dv(0, 0) -= 1.0;
    dv(wrap(-1, rows), 0) += 1.0;
    s.dh_hat = s.fft.forward(dh);
    s.dv_hat = s.fft.forward(dv);

    s.denominator.resize(rows * cols);
    for (std::size_t i = 0; i < s.denominator.size(); ++i) {
        const double d = std::norm(s.dh_hat[i]) + std::norm(s.dv_hat[i]) + beta_ratio * std::norm(s.k_hat[i]);
        if (!(d > 0.0))
            throw std::domain_error("spectrum_of: normal-equation matrix is singular (Ker(D'D) and Ker(K'K) intersect)");
        s.denominator[i] = d;
    }
    return s;
}

/// Circular convolution with the kernel, through the cached spectrum.
inline ImageGrid apply_blur(const ImageGrid& u, const BlurSpectrum& spec)
{
    if (u.height() != spec.rows || u.width() != spec.cols)
        throw std::invalid_argument("apply_blur: dimension mismatch");
    if (spec.kernel.band == 1) return u; // exact identity, no transform round-off
    ComplexRaster f = spec.fft.forward(u);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= spec.k_hat[i];
    return spec.fft.inverse_real(std::move(f));
}

inline ImageGrid apply_blur_adjoint(const ImageGrid& u, const BlurSpectrum& spec)
{
    if (u.height() != spec.rows || u.width() != spec.cols)
        throw std::invalid_argument("apply_blur_adjoint: dimension mismatch");
    if (spec.kernel.band == 1) return u;
    ComplexRaster f = spec.fft.forward(u);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::conj(spec.k_hat[i]);
    return spec.fft.inverse_real(std::move(f));
}

/// K^T applied directly in the spatial domain (circular correlation).
inline ImageGrid blur_adjoint_spatial(const ImageGrid& u, const BlurKernel& kernel)
{
    const std::size_t rows = u.height(), cols = u.width();
    const int rad = kernel.radius();
    const auto wrapped = [rad](std::size_t n) {
        // wrapped[i * band + (a + rad)] = (i + a) mod n
        const int band = 2 * rad + 1, m = static_cast<int>(n);
        std::vector<std::size_t> idx(n * static_cast<std::size_t>(band));
        for (int i = 0; i < m; ++i)
            for (int a = -rad; a <= rad; ++a)
                idx[static_cast<std::size_t>(i * band + a + rad)] = static_cast<std::size_t>(((i + a) % m + m) % m);
        return idx;
    };
    const std::vector<std::size_t> row_idx = wrapped(rows), col_idx = wrapped(cols);
    const std::size_t band = static_cast<std::size_t>(kernel.band);

    ImageGrid out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::size_t a = 0; a < band; ++a) {
                const std::size_t rr = row_idx[r * band + a];
                const double* w = &kernel.weights[a * band];
                for (std::size_t b = 0; b < band; ++b) acc += w[b] * u(rr, col_idx[c * band + b]);
            }
            out(r, c) = acc;
        }
    return out;
}

} // namespace svtv
