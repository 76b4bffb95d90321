#pragma once

// CODATA 2018, SI units.
namespace shb::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J/T
inline constexpr double planck = 6.62607015e-34;           // J s
inline constexpr double boltzmann = 1.380649e-23;          // J/K
inline constexpr double mu0_over_4pi = 1.00000000055e-7;   // T m / A

/// mu_B / h in Hz/T.
inline constexpr double bohr_magneton_hz_per_tesla = bohr_magneton / planck;

} // namespace shb::constants
