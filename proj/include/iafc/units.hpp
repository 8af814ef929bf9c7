#pragma once

#include <numbers>

// Frequencies are angular, in rad/us. Times are in us.
namespace iafc::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordinary frequency in MHz to angular frequency in rad/us.
constexpr double from_mhz(double mhz) { return two_pi * mhz; }

inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K

/// E/(k_B T) for an energy given as angular frequency E/hbar in rad/us.
constexpr double energy_over_kt(double omega_rad_per_us, double kelvin)
{
    return hbar * omega_rad_per_us * 1e6 / (k_boltzmann * kelvin);
}

} // namespace iafc::units
