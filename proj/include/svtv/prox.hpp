#pragma once

#include "svtv/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace svtv {

// ---------------------------------------------------------------------------
// Residual (r) subproblem: argmin_r (mu/q)||r||_q^q + (beta_r/2)||r - v||^2
// ---------------------------------------------------------------------------

/// q = 1: componentwise soft threshold at mu/beta_r.
inline ImageGrid solve_r_l1(const ImageGrid& v, double mu, double beta_r)
{
    const double thr = mu / beta_r;
    ImageGrid r(v.height(), v.width());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - thr;
        r[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
    }
    return r;
}

/// q = 2 with fixed mu.
inline ImageGrid solve_r_l2_fixed(const ImageGrid& v, double mu, double beta_r)
{
    const double scale = beta_r / (beta_r + mu);
    ImageGrid r = v;
    for (double& x : r.pixels()) x *= scale;
    return r;
}

struct DiscrepancyStep {
    ImageGrid r;
    double mu = 0.0;
};

/// q = 2 with mu chosen so that ||r||_2 never exceeds the noise level delta.
inline DiscrepancyStep solve_r_l2_discrepancy(const ImageGrid& v, double delta, double beta_r)
{
    if (!(delta > 0.0)) throw std::invalid_argument("solve_r_l2_discrepancy: noise level must be positive");
    const double nv = norm2(v);
    if (nv <= delta) return {v, 0.0};
    DiscrepancyStep out{v, beta_r * (nv / delta - 1.0)};
    const double scale = delta / nv;
    for (double& x : out.r.pixels()) x *= scale;
    return out;
}

// ---------------------------------------------------------------------------
// Gradient (t) subproblem, one pixel at a time:
//   argmin_t alpha ||t||^p + (beta_t/2)||t - q||^2,  t in R^2.
// The minimizer is radial, t = xi q, with rho = xi ||q|| minimizing
//   phi(rho) = alpha rho^p + (beta_t/2)(rho - ||q||)^2  over rho >= 0.
// ---------------------------------------------------------------------------

inline double shrink_objective(double rho, double qnorm, double alpha, double p, double beta_t)
{
    const double d = rho - qnorm;
    return alpha * std::pow(rho, p) + 0.5 * beta_t * d * d;
}

namespace detail {

/// Root of phi'(rho) = alpha p rho^(p-1) + beta (rho - Q) on [lo, hi] with
/// phi'(lo) < 0 < phi'(hi) and phi convex on the bracket. Newton steps that
/// leave the bracket fall back to bisection.
inline double shrink_root(double lo, double hi, double qnorm, double alpha, double p, double beta_t)
{
    const auto dphi = [&](double x) { return alpha * p * std::pow(x, p - 1.0) + beta_t * (x - qnorm); };
    const auto d2phi = [&](double x) { return alpha * p * (p - 1.0) * std::pow(x, p - 2.0) + beta_t; };

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = dphi(x);
        if (f == 0.0) return x;
        if (f < 0.0) lo = x;
        else hi = x;
        const double fp = d2phi(x);
        double next = (fp > 0.0 && std::isfinite(fp)) ? x - f / fp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, qnorm) || hi - lo <= 1e-15 * std::max(1.0, qnorm))
            return next;
        x = next;
    }
    return x;
}

} // namespace detail

/// Shrinkage coefficient xi in [0,1] for ||q|| = qnorm.
inline double shrink_coefficient(double qnorm, double alpha, double p, double beta_t)
{
    if (!(qnorm > 0.0)) return 0.0;
    if (p == 1.0) return std::max(1.0 - alpha / (beta_t * qnorm), 0.0);
    if (p == 2.0) return beta_t / (beta_t + 2.0 * alpha);

    if (p > 1.0) {
        // Strictly convex with phi'(0+) = -beta Q < 0 < phi'(Q).
        return detail::shrink_root(0.0, qnorm, qnorm, alpha, p, beta_t) / qnorm;
    }

    // p < 1: phi is concave below the inflection point and convex above it.
    const double inflection = std::pow(alpha * p * (1.0 - p) / beta_t, 1.0 / (2.0 - p));
    if (inflection >= qnorm) return 0.0;
    const double slope_at_inflection = alpha * p * std::pow(inflection, p - 1.0) + beta_t * (inflection - qnorm);
    if (slope_at_inflection >= 0.0) return 0.0;
    const double rho = detail::shrink_root(inflection, qnorm, qnorm, alpha, p, beta_t);
    const double at_rho = shrink_objective(rho, qnorm, alpha, p, beta_t);
    const double at_zero = 0.5 * beta_t * qnorm * qnorm;
    return at_rho < at_zero ? rho / qnorm : 0.0;
}

struct Vec2 {
    double h = 0.0;
    double v = 0.0;
};

inline Vec2 prox_t(Vec2 q, double alpha, double p, double beta_t)
{
    const double xi = shrink_coefficient(std::hypot(q.h, q.v), alpha, p, beta_t);
    return {xi * q.h, xi * q.v};
}

} // namespace svtv
