#pragma once

namespace traplab::constants {

// CODATA 2018
inline constexpr double elementary_charge = 1.602176634e-19;  // C (exact)
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double standard_gravity = 9.80665;  // m/s^2 (exact)

inline constexpr double ca40_mass = 39.9625909 * atomic_mass_unit;  // kg

}  // namespace traplab::constants
