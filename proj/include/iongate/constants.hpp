#pragma once

#include <numbers>

// CODATA 2018 exact / recommended values, SI units.
namespace iongate::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double k_boltzmann = 1.380649e-23;        // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double epsilon0 = 8.8541878128e-12;       // F / m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double speed_of_light = 299792458.0;      // m / s

inline constexpr double yb171_mass_amu = 170.9363258;

/// e^2 / (4 pi eps0) for a given ion charge, in J m.
constexpr double coulomb_constant(double charge) {
  return charge * charge / (4.0 * pi * epsilon0);
}

}  // namespace iongate::constants
