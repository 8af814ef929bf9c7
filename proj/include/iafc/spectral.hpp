#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "iafc/comb.hpp"
#include "iafc/error.hpp"
#include "iafc/fft.hpp"
#include "iafc/units.hpp"

namespace iafc {

using Complex = std::complex<double>;

/// Uniform grid of n_points angular frequencies centered on the carrier,
/// omega_j = (j - n/2) * d_omega, and its conjugate time grid
/// t_k = (k - n/2) * dt with dt = 2 pi / (n * d_omega).
struct SpectralGrid {
    std::size_t n_points = 0;
    double d_omega = 0.0;

    SpectralGrid() = default;
    SpectralGrid(std::size_t n, double step) : n_points(n), d_omega(step)
    {
        if (n < 2 || !std::has_single_bit(n)) throw GridError("grid size must be a power of two >= 2");
        if (!(step > 0.0) || !std::isfinite(step)) throw GridError("grid step must be positive");
    }

    double omega(std::size_t j) const { return (double(j) - double(n_points / 2)) * d_omega; }
    double time_step() const { return units::two_pi / (double(n_points) * d_omega); }
    double time(std::size_t k) const { return (double(k) - double(n_points / 2)) * time_step(); }
    double omega_span() const { return double(n_points) * d_omega; }
    /// Length of the periodic time window, 2 pi / d_omega.
    double time_window() const { return units::two_pi / d_omega; }
    /// Largest sampled time.
    double max_time() const { return time(n_points - 1); }

    friend bool operator==(const SpectralGrid&, const SpectralGrid&) = default;
};

struct GridOptions {
    std::size_t max_points = std::size_t{1} << 22;
    /// Extra room beyond the outermost tooth, e.g. the largest random shift.
    double center_margin = 0.0;
};

/// Smallest power-of-two grid that covers the comb and 6 sigma of the pulse
/// on both sides, resolves the narrowest tooth with 20 points per width, and
/// spans at least three echo periods in time.
inline SpectralGrid make_grid(const FrequencyComb& comb, double pulse_sigma, GridOptions opts = {})
{
    detail::require(pulse_sigma > 0.0 && std::isfinite(pulse_sigma), "pulse width must be positive");
    detail::require(opts.center_margin >= 0.0, "center margin must be non-negative");

    double step = comb.min_width() / 20.0;
    if (comb.size() >= 2) step = std::min(step, comb.mean_spacing() / 3.0);
    const double span = 2.0 * (comb.max_abs_center() + opts.center_margin + 6.0 * pulse_sigma);

    const double needed = std::ceil(span / step);
    if (!std::isfinite(needed) || needed > double(opts.max_points))
        throw GridError("spectral grid would need more than " + std::to_string(opts.max_points) +
                        " points; reduce the pulse bandwidth or widen the teeth");
    const auto n = std::bit_ceil(std::max<std::size_t>(2, static_cast<std::size_t>(needed)));
    if (n > opts.max_points)
        throw GridError("spectral grid would need more than " + std::to_string(opts.max_points) + " points");
    return SpectralGrid(n, step);
}

/// Field amplitudes E(z, omega) on a spectral grid.
struct SpectralField {
    SpectralGrid grid;
    std::vector<Complex> amplitudes;

    /// (d_omega / 2 pi) sum |E|^2, equal to the time-domain energy.
    double energy() const
    {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s * grid.d_omega / units::two_pi;
    }
};

/// Field amplitudes E(z, t) on the time grid conjugate to `grid`.
struct TimeField {
    SpectralGrid grid;
    std::vector<Complex> amplitudes;

    double time(std::size_t k) const { return grid.time(k); }
    double time_step() const { return grid.time_step(); }

    double energy() const
    {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s * grid.time_step();
    }

    std::vector<double> intensity() const
    {
        std::vector<double> out(amplitudes.size());
        std::ranges::transform(amplitudes, out.begin(), [](Complex a) { return std::norm(a); });
        return out;
    }
};

/// |E(z, t)|^2 without phase, e.g. an incoherent sum over atoms.
struct IntensityTrace {
    SpectralGrid grid;
    std::vector<double> values;

    double time(std::size_t k) const { return grid.time(k); }
};

/// exp(-omega^2 / (2 sigma^2)) sampled on the grid.
inline SpectralField gaussian_spectrum(const SpectralGrid& grid, double sigma)
{
    detail::require(sigma > 0.0 && std::isfinite(sigma), "pulse width must be positive");
    SpectralField f{grid, std::vector<Complex>(grid.n_points)};
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        const double x = grid.omega(j) / sigma;
        f.amplitudes[j] = std::exp(-0.5 * x * x);
    }
    return f;
}

/// D(omega) * L = sum_n depth_n * L / (1/2 + i (omega - center_n) / width_n).
///
/// The free-space term i omega / c is a pure delay and is left out; times
/// are measured in the retarded frame.
inline std::vector<Complex> propagator(const FrequencyComb& comb, const SpectralGrid& grid, double l_scale)
{
    std::vector<Complex> d(grid.n_points, Complex{0.0, 0.0});
    for (const auto& tooth : comb.teeth()) {
        if (tooth.depth == 0.0) continue;
        const double strength = tooth.depth * l_scale;
        for (std::size_t j = 0; j < grid.n_points; ++j) {
            const double x = (grid.omega(j) - tooth.center) / tooth.width;
            // strength / (1/2 + i x), written out to skip the complex division
            const double denom = 0.25 + x * x;
            d[j] += Complex{0.5 * strength / denom, -x * strength / denom};
        }
    }
    return d;
}

/// Inverse Fourier transform onto the conjugate time grid:
/// E(t_k) = (d_omega / 2 pi) sum_j E(omega_j) exp(i omega_j t_k).
inline TimeField to_time_domain(const SpectralField& field)
{
    const auto n = field.grid.n_points;
    if (field.amplitudes.size() != n) throw GridError("field length does not match its grid");
    const std::size_t half = n / 2;

    // Rotate so that index 0 holds omega = 0, transform, rotate back.
    std::vector<Complex> shifted(n);
    for (std::size_t j = 0; j < n; ++j) shifted[j] = field.amplitudes[(j + half) % n];
    const auto raw = fft::backward(shifted);

    const double scale = field.grid.d_omega / units::two_pi;
    TimeField out{field.grid, std::vector<Complex>(n)};
    for (std::size_t k = 0; k < n; ++k) out.amplitudes[k] = raw[(k + half) % n] * scale;
    return out;
}

struct ForwardResult {
    SpectralField spectrum;
    TimeField trace;
};

/// Checks that the grid resolves the comb: covers every tooth and samples the
/// narrowest tooth at least 20 times per width.
inline void check_grid_resolves(const SpectralGrid& grid, const FrequencyComb& comb)
{
    if (grid.d_omega > comb.min_width() / 20.0 * (1.0 + 1e-12))
        throw GridError("grid step does not resolve the narrowest tooth");
    if (comb.max_abs_center() >= 0.5 * grid.omega_span())
        throw GridError("comb extends beyond the spectral grid");
}

/// E(L, omega) = E(0, omega) exp(-D(omega) L), plus its time-domain trace.
inline ForwardResult propagate_forward(const SpectralField& pulse, const FrequencyComb& comb, double l_scale)
{
    detail::require(l_scale >= 0.0 && std::isfinite(l_scale), "length scale must be non-negative");
    if (pulse.amplitudes.size() != pulse.grid.n_points) throw GridError("pulse length does not match its grid");
    check_grid_resolves(pulse.grid, comb);

    const auto dl = propagator(comb, pulse.grid, l_scale);
    SpectralField out{pulse.grid, std::vector<Complex>(pulse.grid.n_points)};
    for (std::size_t j = 0; j < dl.size(); ++j) out.amplitudes[j] = pulse.amplitudes[j] * std::exp(-dl[j]);
    auto trace = to_time_domain(out);
    return {std::move(out), std::move(trace)};
}

namespace detail {

inline double lerp_at(std::span<const double> v, const SpectralGrid& g, double t)
{
    const double pos = t / g.time_step() + double(g.n_points / 2);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - double(k);
    if (k + 1 >= v.size()) return v[k];
    return v[k] + frac * (v[k + 1] - v[k]);
}

} // namespace detail

/// Integral of the piecewise-linear interpolant of `intensity` over [lo, hi]
/// (trapezoidal rule, with partial intervals at both ends).
inline double window_energy(std::span<const double> intensity, const SpectralGrid& grid, double lo, double hi)
{
    if (intensity.size() != grid.n_points) throw GridError("trace length does not match its grid");
    if (!(hi > lo)) throw GridError("empty integration window");
    if (lo < grid.time(0) || hi > grid.max_time())
        throw GridError("integration window exceeds the time grid; rebuild a larger grid");

    const double dt = grid.time_step();
    const double origin = double(grid.n_points / 2);
    const auto k0 = static_cast<std::size_t>(std::ceil(lo / dt + origin));
    const auto k1 = static_cast<std::size_t>(std::floor(hi / dt + origin));
    const double f_lo = detail::lerp_at(intensity, grid, lo);
    const double f_hi = detail::lerp_at(intensity, grid, hi);
    if (k0 > k1) return 0.5 * (hi - lo) * (f_lo + f_hi);

    double s = 0.5 * (grid.time(k0) - lo) * (f_lo + intensity[k0]);
    for (std::size_t k = k0; k < k1; ++k) s += 0.5 * dt * (intensity[k] + intensity[k + 1]);
    s += 0.5 * (hi - grid.time(k1)) * (intensity[k1] + f_hi);
    return s;
}

/// First-echo efficiency: energy in [pi/delta, 3 pi/delta] over the input energy.
inline double first_echo_efficiency(const IntensityTrace& out, double input_energy, double delta)
{
    detail::require(delta > 0.0 && std::isfinite(delta), "comb spacing must be positive");
    detail::require(input_energy > 0.0, "input energy must be positive");
    const double pi = units::two_pi / 2.0;
    return window_energy(out.values, out.grid, pi / delta, 3.0 * pi / delta) / input_energy;
}

inline double first_echo_efficiency(const TimeField& out, const TimeField& in, double delta)
{
    if (!(out.grid == in.grid)) throw GridError("output and input traces live on different grids");
    return first_echo_efficiency(IntensityTrace{out.grid, out.intensity()}, in.energy(), delta);
}

struct EchoPeak {
    double time = 0.0;
    double intensity = 0.0;
    /// False when the maximum sits on a window edge or barely rises above the
    /// window mean, i.e. no distinguished echo (e.g. a single-tooth comb).
    bool reliable = false;
};

inline EchoPeak echo_peak_time(const IntensityTrace& out, double t_lo, double t_hi)
{
    const auto& g = out.grid;
    if (!(t_hi > t_lo)) throw GridError("empty echo window");
    if (t_lo < g.time(0) || t_hi > g.max_time()) throw GridError("echo window exceeds the time grid");
    const double origin = double(g.n_points / 2);
    const auto k0 = static_cast<std::size_t>(std::ceil(t_lo / g.time_step() + origin));
    const auto k1 = static_cast<std::size_t>(std::floor(t_hi / g.time_step() + origin));
    if (k0 > k1) throw GridError("echo window contains no samples");

    std::size_t best = k0;
    double mean = 0.0;
    for (std::size_t k = k0; k <= k1; ++k) {
        mean += out.values[k];
        if (out.values[k] > out.values[best]) best = k;
    }
    mean /= double(k1 - k0 + 1);

    EchoPeak p{g.time(best), out.values[best], false};
    p.reliable = best != k0 && best != k1 && p.intensity > 2.0 * mean;
    return p;
}

inline EchoPeak echo_peak_time(const TimeField& out, double t_lo, double t_hi)
{
    return echo_peak_time(IntensityTrace{out.grid, out.intensity()}, t_lo, t_hi);
}

} // namespace iafc
