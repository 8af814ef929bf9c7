#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "iafc/error.hpp"

// Indirect backward-mode estimate: fit a forward efficiency-vs-length curve
// with eta0 (a L)^2 exp(-a L), then evaluate eta0 (1 - exp(-a L))^2.
namespace iafc {

struct FitResult {
    double eta0 = 0.0;
    /// Effective depth per unit length scale.
    double alpha_tilde = 0.0;
    double rms_residual = 0.0;
    bool converged = false;
};

struct FitOptions {
    /// Search range for alpha_tilde * max(length).
    double x_min = 1e-3;
    double x_max = 1e3;
    std::size_t coarse_points = 400;
    double rel_tol = 1e-8;
};

namespace detail {

struct FitModel {
    std::span<const double> u;  // lengths over the largest length
    std::span<const double> y;

    // Optimal prefactor for fixed x (linear least squares) and the residual sum.
    std::pair<double, double> evaluate(double x) const
    {
        double fy = 0.0, ff = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double v = x * u[i];
            const double f = v * v * std::exp(-v);
            fy += f * y[i];
            ff += f * f;
        }
        const double eta0 = ff > 0.0 ? fy / ff : 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double v = x * u[i];
            const double r = eta0 * v * v * std::exp(-v) - y[i];
            s += r * r;
        }
        return {eta0, s};
    }
};

} // namespace detail

/// Least-squares fit of eta0 (a L)^2 exp(-a L) to (lengths, efficiencies).
/// a is located on a log-spaced coarse grid and refined by golden-section
/// search; eta0 is solved in closed form at every a. `converged` is false
/// when the best coarse point sits on the search boundary.
inline FitResult fit_forward_model(std::span<const double> lengths, std::span<const double> efficiencies,
                                   FitOptions opts = {})
{
    if (lengths.size() != efficiencies.size()) throw FitError("lengths and efficiencies differ in size");
    if (lengths.size() < 5) throw FitError("forward fit needs at least 5 points");
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i])) throw FitError("lengths must be positive");
        if (i > 0 && !(lengths[i] > lengths[i - 1])) throw FitError("lengths must be strictly increasing");
        if (!(efficiencies[i] >= 0.0 && efficiencies[i] <= 1.0))
            throw FitError("efficiencies must lie in [0, 1]");
    }
    if (std::ranges::all_of(efficiencies, [](double y) { return y == 0.0; }))
        throw FitError("all efficiencies are zero; nothing to fit");

    const double l_max = lengths.back();
    std::vector<double> u(lengths.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = lengths[i] / l_max;
    const detail::FitModel model{u, efficiencies};

    const double log_lo = std::log(opts.x_min);
    const double step = (std::log(opts.x_max) - log_lo) / double(opts.coarse_points - 1);
    auto x_at = [&](std::size_t k) { return std::exp(log_lo + step * double(k)); };

    std::size_t best = 0;
    double best_s = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < opts.coarse_points; ++k) {
        const double s = model.evaluate(x_at(k)).second;
        if (s < best_s) {
            best_s = s;
            best = k;
        }
    }

    FitResult r;
    const bool on_edge = best == 0 || best + 1 == opts.coarse_points;
    double x = x_at(best);
    if (!on_edge) {
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = x_at(best - 1), b = x_at(best + 1);
        double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
        double fc = model.evaluate(c).second, fd = model.evaluate(d).second;
        while (b - a > opts.rel_tol * 0.5 * (a + b)) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = model.evaluate(c).second;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = model.evaluate(d).second;
            }
        }
        x = 0.5 * (a + b);
    }

    const auto [eta0, s] = model.evaluate(x);
    r.eta0 = eta0;
    r.alpha_tilde = x / l_max;
    r.rms_residual = std::sqrt(s / double(u.size()));
    // eta0 = 1 data lands a few ulps either side of 1
    r.converged = !on_edge && eta0 > 0.0 && eta0 <= 1.0 + 1e-6;
    return r;
}

/// eta0 (1 - exp(-a L))^2 from a converged fit.
inline double backward_efficiency(const FitResult& fit, double l_scale)
{
    if (!fit.converged) throw FitError("backward estimate requested from a fit that did not converge");
    detail::require(l_scale >= 0.0, "length scale must be non-negative");
    const double absorbed = -std::expm1(-fit.alpha_tilde * l_scale);
    return fit.eta0 * absorbed * absorbed;
}

inline constexpr double default_gate_threshold = 0.02;

/// True when the analytic model describes the data well enough for a
/// backward estimate (rms residual at most `threshold`, in efficiency units).
inline bool fit_quality_gate(const FitResult& fit, double threshold = default_gate_threshold)
{
    return fit.rms_residual <= threshold;
}

struct BackwardEstimate {
    FitResult fit;
    /// Backward efficiency at the largest fitted length.
    double eta_backward = 0.0;
    double at_length = 0.0;
    bool gate_passed = false;
};

/// Fit, gate and evaluate in one step. The backward efficiency is reported
/// at the largest length of the sweep; NaN if the fit did not converge.
inline BackwardEstimate estimate_backward(std::span<const double> lengths, std::span<const double> efficiencies,
                                          double threshold = default_gate_threshold)
{
    BackwardEstimate e;
    e.fit = fit_forward_model(lengths, efficiencies);
    e.at_length = lengths.back();
    e.gate_passed = e.fit.converged && fit_quality_gate(e.fit, threshold);
    e.eta_backward = e.fit.converged ? backward_efficiency(e.fit, e.at_length)
                                     : std::numeric_limits<double>::quiet_NaN();
    return e;
}

} // namespace iafc
