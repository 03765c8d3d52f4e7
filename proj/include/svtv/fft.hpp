#pragma once

#include "svtv/raster.hpp"

#include <fftw3.h>

#include <complex>
#include <memory>
#include <vector>

namespace svtv {

using ComplexRaster = std::vector<std::complex<double>>;

/// In-place 2D complex DFT of a fixed size, backed by FFTW. Forward is
/// unnormalized; inverse divides by n so inverse(forward(x)) == x.
class Fft2d {
public:
    Fft2d(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), plans_(std::make_shared<Plans>(rows, cols)) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    ComplexRaster forward(const ImageGrid& x) const
    {
        ComplexRaster buf(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
        forward_inplace(buf);
        return buf;
    }

    void forward_inplace(ComplexRaster& buf) const
    {
        fftw_execute_dft(plans_->fwd, as_fftw(buf), as_fftw(buf));
    }

    /// Inverse transform, keeping the real part.
    ImageGrid inverse_real(ComplexRaster buf) const
    {
        fftw_execute_dft(plans_->inv, as_fftw(buf), as_fftw(buf));
        const double scale = 1.0 / static_cast<double>(buf.size());
        ImageGrid out(rows_, cols_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = buf[i].real() * scale;
        return out;
    }

private:
    struct Plans {
        fftw_plan fwd = nullptr;
        fftw_plan inv = nullptr;

        Plans(std::size_t rows, std::size_t cols)
        {
            // FFTW_ESTIMATE keeps planning deterministic and leaves the scratch buffer untouched.
            ComplexRaster scratch(rows * cols);
            const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
            fwd = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), as_fftw(scratch),
                                   as_fftw(scratch), FFTW_FORWARD, flags);
            inv = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), as_fftw(scratch),
                                   as_fftw(scratch), FFTW_BACKWARD, flags);
        }
        ~Plans()
        {
            fftw_destroy_plan(fwd);
            fftw_destroy_plan(inv);
        }
        Plans(const Plans&) = delete;
        Plans& operator=(const Plans&) = delete;
    };

    static fftw_complex* as_fftw(ComplexRaster& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

    std::size_t rows_;
    std::size_t cols_;
    std::shared_ptr<Plans> plans_;
};

} // namespace svtv
