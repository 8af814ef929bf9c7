#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>

#include "iafc/error.hpp"

// Closed-form results for an ideal atomic frequency comb.
namespace iafc::analytic {

/// Effective depth (alpha L / F) and finesse. Use an infinite finesse for the
/// high-finesse limit.
struct AfcParams {
    double alpha_tilde_L = 0.0;
    double finesse = std::numeric_limits<double>::infinity();
};

inline void validate(const AfcParams& p)
{
    detail::require(p.alpha_tilde_L >= 0.0 && !std::isnan(p.alpha_tilde_L), "effective depth must be non-negative");
    detail::require(p.finesse > 0.0, "finesse must be positive");
}

/// Intensity loss exp(-2 (sqrt(2) pi / F)^2) from the finite tooth width.
inline double dephasing_factor(double finesse)
{
    detail::require(finesse > 0.0, "finesse must be positive");
    const double x = std::numbers::sqrt2 * std::numbers::pi / finesse;
    return std::exp(-2.0 * x * x);
}

/// P(t) = |sum_j c_j exp(i j t delta)|^2 with j running symmetrically about
/// zero (j = -N..N for 2N+1 coefficients).
inline double emission_probability(std::span<const std::complex<double>> coeffs, double t, double delta)
{
    detail::require(!coeffs.empty(), "need at least one comb coefficient");
    const double mid = 0.5 * double(coeffs.size() - 1);
    std::complex<double> s{0.0, 0.0};
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        s += coeffs[k] * std::polar(1.0, (double(k) - mid) * t * delta);
    return std::norm(s);
}

/// Forward-mode first-echo efficiency, F_d (a L)^2 exp(-a L).
inline double eta_forward(const AfcParams& p)
{
    validate(p);
    const double x = p.alpha_tilde_L;
    if (std::isinf(x)) return 0.0;
    return dephasing_factor(p.finesse) * x * x * std::exp(-x);
}

/// Backward-mode efficiency, F_d (1 - exp(-a L))^2.
inline double eta_backward(const AfcParams& p)
{
    validate(p);
    const double absorbed = -std::expm1(-p.alpha_tilde_L);
    return dephasing_factor(p.finesse) * absorbed * absorbed;
}

} // namespace iafc::analytic
