#pragma once

#include "svtv/blur.hpp"
#include "svtv/ggd.hpp"
#include "svtv/gradient.hpp"
#include "svtv/prox.hpp"
#include "svtv/raster.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace svtv {

/// Regularizer family. TV: p = 1, alpha = 1. TVp: one global p, alpha = 1.
/// TVpSv: per-pixel p, alpha = 1. TVpaSv: per-pixel p and alpha.
enum class Variant { TV, TVp, TVpSv, TVpaSv };

inline std::string to_string(Variant v)
{
    switch (v) {
    case Variant::TV: return "TV";
    case Variant::TVp: return "TVp";
    case Variant::TVpSv: return "TVp-sv";
    case Variant::TVpaSv: return "TVpa-sv";
    }
    return "?";
}

inline Variant parse_variant(std::string s)
{
    // Accept an optional fidelity suffix such as "TV-L2".
    if (s.size() > 3 && (s.ends_with("-L1") || s.ends_with("-L2"))) s.resize(s.size() - 3);
    if (s == "TV") return Variant::TV;
    if (s == "TVp") return Variant::TVp;
    if (s == "TVp-sv") return Variant::TVpSv;
    if (s == "TVpa-sv") return Variant::TVpaSv;
    throw std::invalid_argument("unknown regularizer variant '" + s + "'");
}

inline std::string variant_label(Variant v, int fidelity) { return to_string(v) + "-L" + std::to_string(fidelity); }

/// Maps actually used by a variant, given the estimated maps.
inline ParamMaps maps_for_variant(Variant v, const ParamMaps& estimated, double p_global)
{
    ParamMaps out;
    out.window = estimated.window;
    const std::size_t rows = estimated.p.height(), cols = estimated.p.width();
    switch (v) {
    case Variant::TV:
        out.p = ImageGrid(rows, cols, 1.0);
        out.alpha = ImageGrid(rows, cols, 1.0);
        break;
    case Variant::TVp:
        out.p = ImageGrid(rows, cols, p_global);
        out.alpha = ImageGrid(rows, cols, 1.0);
        break;
    case Variant::TVpSv:
        out.p = estimated.p;
        out.alpha = ImageGrid(rows, cols, 1.0);
        break;
    case Variant::TVpaSv:
        out = estimated;
        break;
    }
    return out;
}

/// q = 2 runs either use a fixed mu or adapt mu each iteration to the noise
/// level delta (discrepancy mode). q = 1 runs always use a fixed mu.
struct SolverConfig {
    int fidelity = 2;
    double beta_r = 50.0;
    double beta_t = 10.0;
    std::optional<double> mu;
    std::optional<double> delta;
    double tol = 1e-4;
    int max_iter = 500;
    bool verify_u_solve = false; // record the normal-equation residual of every u update

    void validate() const
    {
        if (fidelity != 1 && fidelity != 2) throw std::invalid_argument("SolverConfig: fidelity must be 1 or 2");
        if (!(beta_r > 0.0) || !(beta_t > 0.0)) throw std::invalid_argument("SolverConfig: penalties must be positive");
        if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
        if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be positive");
        if (mu && !(*mu >= 0.0)) throw std::invalid_argument("SolverConfig: mu must be nonnegative");
        if (delta && !(*delta > 0.0)) throw std::invalid_argument("SolverConfig: noise level must be positive");
        if (fidelity == 1 && !mu) throw std::invalid_argument("SolverConfig: L1 fidelity needs a fixed mu");
        if (fidelity == 1 && delta) throw std::invalid_argument("SolverConfig: discrepancy mode is L2 only");
        if (fidelity == 2 && mu.has_value() == delta.has_value())
            throw std::invalid_argument("SolverConfig: L2 fidelity needs exactly one of mu or delta");
    }
};

/// Noise level for the discrepancy principle: tau * sigma * sqrt(n).
inline double discrepancy_level(double sigma, std::size_t n, double tau = 1.0)
{
    return tau * sigma * std::sqrt(static_cast<double>(n));
}

struct SolverState {
    ImageGrid u;
    ImageGrid r;
    GradientField t;
    ImageGrid lambda_r;
    GradientField lambda_t;
    double mu = 0.0;
    int iteration = 0;
};

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    double rel_change = 0.0;
    double residual_r = 0.0; // ||r - (Ku - g)||
    double residual_t = 0.0; // ||t - Du||
    double mu = 0.0;
    double u_solve_residual = std::numeric_limits<double>::quiet_NaN();
};

enum class Termination { Converged, MaxIterations };

inline std::string to_string(Termination t) { return t == Termination::Converged ? "converged" : "max_iter"; }

struct RestoreResult {
    ImageGrid u;
    Termination termination = Termination::MaxIterations;
    int iterations = 0;
    double final_mu = 0.0;
    std::vector<IterationRecord> history;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int iteration, std::vector<IterationRecord> history)
        : std::runtime_error("solver diverged: non-finite value at iteration " + std::to_string(iteration)),
          iteration_(iteration), history_(std::move(history)) {}

    int iteration() const { return iteration_; }
    const std::vector<IterationRecord>& history() const { return history_; }

private:
    int iteration_;
    std::vector<IterationRecord> history_;
};

/// v = Ku - g + lambda_r / beta_r, given Ku.
inline ImageGrid compute_v(const ImageGrid& blurred_u, const ImageGrid& lambda_r, double beta_r, const ImageGrid& g)
{
    require_same_shape(blurred_u, g, "compute_v");
    ImageGrid v(g.height(), g.width());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = blurred_u[i] - g[i] + lambda_r[i] / beta_r;
    return v;
}

inline ImageGrid compute_v(const ImageGrid& u, const ImageGrid& lambda_r, double beta_r, const ImageGrid& g,
                           const BlurSpectrum& spec)
{
    return compute_v(apply_blur(u, spec), lambda_r, beta_r, g);
}

/// Pixelwise t update: t_i = xi_i q_i with q = Du + lambda_t / beta_t.
inline GradientField solve_t(const GradientField& du, const GradientField& lambda_t, const ParamMaps& maps, double beta_t)
{
    GradientField t(du.height(), du.width());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Vec2 q{du.h[i] + lambda_t.h[i] / beta_t, du.v[i] + lambda_t.v[i] / beta_t};
        const Vec2 ti = prox_t(q, maps.alpha[i], maps.p[i], beta_t);
        t.h[i] = ti.h;
        t.v[i] = ti.v;
    }
    return t;
}

/// Right-hand side of (D'D + (beta_r/beta_t) K'K) u = b.
inline ImageGrid u_update_rhs(const GradientField& t, const ImageGrid& r, const GradientField& lambda_t,
                              const ImageGrid& lambda_r, const ImageGrid& g, const BlurKernel& kernel,
                              double beta_r, double beta_t)
{
    const ImageGrid grad_part = div_adjoint(axpy(t, -1.0 / beta_t, lambda_t));
    ImageGrid data = axpy(r, -1.0 / beta_r, lambda_r);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += g[i];
    const ImageGrid blur_part = blur_adjoint_spatial(data, kernel);
    return axpy(grad_part, beta_r / beta_t, blur_part);
}

/// Exact solve of the u normal equations in the Fourier domain: one forward
/// and one inverse transform.
inline ImageGrid solve_u(const GradientField& t, const ImageGrid& r, const GradientField& lambda_t,
                         const ImageGrid& lambda_r, const ImageGrid& g, const BlurSpectrum& spec,
                         double beta_r, double beta_t)
{
    if (std::abs(spec.beta_ratio - beta_r / beta_t) > 1e-12 * (beta_r / beta_t))
        throw std::invalid_argument("solve_u: spectrum was built for a different penalty ratio");
    if (g.height() != spec.rows || g.width() != spec.cols) throw std::invalid_argument("solve_u: dimension mismatch");

    ComplexRaster f = spec.fft.forward(u_update_rhs(t, r, lambda_t, lambda_r, g, spec.kernel, beta_r, beta_t));
    for (std::size_t i = 0; i < f.size(); ++i) f[i] /= spec.denominator[i];
    return spec.fft.inverse_real(std::move(f));
}

/// (D'D + ratio K'K) u, applied without the spectral diagonalization.
inline ImageGrid apply_u_operator(const ImageGrid& u, const BlurSpectrum& spec)
{
    const ImageGrid dtd = div_adjoint(grad_forward(u));
    const ImageGrid ktk = blur_adjoint_spatial(apply_blur(u, spec), spec.kernel);
    return axpy(dtd, spec.beta_ratio, ktk);
}

/// lambda_r -= beta_r (r - (Ku - g)); lambda_t -= beta_t (t - Du).
inline void update_duals(SolverState& s, const ImageGrid& blurred_u, const GradientField& du, const ImageGrid& g,
                         double beta_r, double beta_t)
{
    for (std::size_t i = 0; i < g.size(); ++i) {
        s.lambda_r[i] -= beta_r * (s.r[i] - (blurred_u[i] - g[i]));
        s.lambda_t.h[i] -= beta_t * (s.t.h[i] - du.h[i]);
        s.lambda_t.v[i] -= beta_t * (s.t.v[i] - du.v[i]);
    }
}

inline double regularizer_value(const GradientField& du, const ParamMaps& maps)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < du.size(); ++i)
        acc += maps.alpha[i] * std::pow(std::hypot(du.h[i], du.v[i]), maps.p[i]);
    return acc;
}

/// sum_i alpha_i ||(Du)_i||^p_i + (mu/q) ||Ku - g||_q^q
inline double objective_value(const ImageGrid& u, const ImageGrid& g, const BlurSpectrum& spec,
                              const ParamMaps& maps, double mu, int fidelity)
{
    const ImageGrid res = apply_blur(u, spec) - g;
    const double fid = fidelity == 1 ? norm1(res) : 0.5 * dot(res, res);
    return regularizer_value(grad_forward(u), maps) + mu * fid;
}

using IterateObserver = std::function<void(const SolverState&)>;

inline RestoreResult restore(const ImageGrid& g, const BlurKernel& kernel, const ParamMaps& maps,
                             const SolverConfig& cfg, const IterateObserver& observer = {})
{
    cfg.validate();
    require_same_shape(g, maps.p, "restore");
    require_same_shape(g, maps.alpha, "restore");

    const double br = cfg.beta_r, bt = cfg.beta_t;
    const BlurSpectrum spec = spectrum_of(kernel, g.height(), g.width(), br / bt);
    const bool discrepancy = cfg.fidelity == 2 && cfg.delta.has_value();

    SolverState s;
    s.u = g;
    s.r = ImageGrid(g.height(), g.width());
    s.t = GradientField(g.height(), g.width());
    s.lambda_r = ImageGrid(g.height(), g.width());
    s.lambda_t = GradientField(g.height(), g.width());
    s.mu = cfg.mu.value_or(0.0);

    ImageGrid ku = apply_blur(s.u, spec);
    GradientField du = grad_forward(s.u);

    RestoreResult result;
    for (int k = 1; k <= cfg.max_iter; ++k) {
        s.iteration = k;

        const ImageGrid v = compute_v(ku, s.lambda_r, br, g);
        if (cfg.fidelity == 1) {
            s.r = solve_r_l1(v, s.mu, br);
        } else if (discrepancy) {
            auto step = solve_r_l2_discrepancy(v, *cfg.delta, br);
            s.r = std::move(step.r);
            s.mu = step.mu;
        } else {
            s.r = solve_r_l2_fixed(v, s.mu, br);
        }

        s.t = solve_t(du, s.lambda_t, maps, bt);

        ImageGrid u_next = solve_u(s.t, s.r, s.lambda_t, s.lambda_r, g, spec, br, bt);

        IterationRecord rec;
        rec.iteration = k;
        rec.mu = s.mu;
        if (cfg.verify_u_solve) {
            const ImageGrid b = u_update_rhs(s.t, s.r, s.lambda_t, s.lambda_r, g, kernel, br, bt);
            const double bn = norm2(b);
            const double rn = norm2(apply_u_operator(u_next, spec) - b);
            rec.u_solve_residual = bn > 0.0 ? rn / bn : rn;
        }

        ku = apply_blur(u_next, spec);
        du = grad_forward(u_next);
        update_duals(s, ku, du, g, br, bt);

        const double prev_norm = norm2(s.u);
        const double change = norm2(u_next - s.u);
        rec.rel_change = prev_norm > 0.0 ? change / prev_norm : change;
        s.u = std::move(u_next);

        ImageGrid res_r(g.height(), g.width());
        for (std::size_t i = 0; i < g.size(); ++i) res_r[i] = s.r[i] - (ku[i] - g[i]);
        rec.residual_r = norm2(res_r);
        rec.residual_t = norm2(axpy(s.t, -1.0, du));
        const ImageGrid fit = ku - g;
        rec.objective = regularizer_value(du, maps) + s.mu * (cfg.fidelity == 1 ? norm1(fit) : 0.5 * dot(fit, fit));

        result.history.push_back(rec);
        if (!all_finite(s.u) || !std::isfinite(rec.objective) || !std::isfinite(rec.residual_r) ||
            !std::isfinite(rec.residual_t) || !std::isfinite(s.mu))
            throw DivergenceError(k, std::move(result.history));

        if (observer) observer(s);

        result.iterations = k;
        if (rec.rel_change < cfg.tol) {
            result.termination = Termination::Converged;
            break;
        }
    }
    result.u = s.u;
    result.final_mu = s.mu;
    return result;
}

} // namespace svtv
