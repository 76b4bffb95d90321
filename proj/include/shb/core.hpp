#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "shb/errors.hpp"

// Units throughout: frequency Hz, time s, field T, temperature K.
namespace shb {

/// Uniform detuning axis. Bin i sits at center + (i - (n-1)/2) * spacing, so
/// the axis is exactly symmetric about its center.
struct FrequencyGrid {
  double center_detuning = 0.0;
  double span = 0.0;
  std::size_t bin_count = 0;

  double spacing() const { return span / static_cast<double>(bin_count - 1); }
  double detuning(std::size_t i) const;
  /// Offset of bin i from the grid center.
  double offset(std::size_t i) const;
  std::vector<double> detunings() const;
  std::size_t nearest_bin(double detuning) const;

  std::vector<Violation> violations() const;

  bool operator==(const FrequencyGrid&) const = default;
};

enum class Quantity { Population, Rate, OpticalDepth };

std::string_view to_string(Quantity q);

/// Values defined on a FrequencyGrid, tagged with what they measure.
struct SpectralArray {
  FrequencyGrid grid;
  std::vector<double> values;
  Quantity quantity = Quantity::Population;

  static SpectralArray constant(const FrequencyGrid& grid, double value, Quantity quantity);
  static SpectralArray zeros(const FrequencyGrid& grid, Quantity quantity) {
    return constant(grid, 0.0, quantity);
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  double max() const;
  double min() const;

  /// `name` prefixes the reported field names.
  std::vector<Violation> violations(std::string_view name) const;
};

/// Throws GridMismatch unless both arrays/grids describe the same axis.
void require_same_grid(const FrequencyGrid& expected, const FrequencyGrid& actual,
                       std::string_view what);

struct MaterialParams {
  // Order-of-magnitude values for Tm:YGG (3H4 and 3F4 lifetimes).
  static constexpr double default_excited_lifetime = 1e-3;
  static constexpr double default_bottleneck_lifetime = 50e-3;
  // Upper bound on the homogeneous linewidth of the 795 nm line.
  static constexpr double default_homogeneous_linewidth = 600.0;

  double excited_lifetime = default_excited_lifetime;        // T_e
  double bottleneck_lifetime = default_bottleneck_lifetime;  // T_b
  /// Fraction of excited-state decay routed through the bottleneck. Required,
  /// there is no meaningful default.
  double branching_ratio = std::numeric_limits<double>::quiet_NaN();
  double homogeneous_linewidth = default_homogeneous_linewidth;  // FWHM
  SpectralArray background_od;                                   // d0

  std::vector<Violation> violations() const;
};

struct LaserParams {
  /// Half-width parameter of the Lorentzian laser line,
  /// R = a * nu^2 / (nu^2 + (delta - delta_o)^2).
  double linewidth = 5e3;
  double rate_amplitude = 0.0;
  double center_detuning = 0.0;

  std::vector<Violation> violations() const;

  bool operator==(const LaserParams&) const = default;
};

/// Per-bin occupations of ground, excited and bottleneck levels.
struct PopulationState {
  SpectralArray ground;
  SpectralArray excited;
  SpectralArray bottleneck;
  double timestamp = 0.0;

  static PopulationState all_ground(const FrequencyGrid& grid, double timestamp = 0.0);

  const FrequencyGrid& grid() const { return ground.grid; }
  /// max over bins of |n_g + n_e + n_b - 1|.
  double conservation_error() const;

  std::vector<Violation> violations() const;
};

inline constexpr double conservation_tolerance = 1e-9;

struct ValidatedConfig {
  MaterialParams material;
  LaserParams laser;
  FrequencyGrid grid;
};

/// Checks every invariant of the three records plus the cross-record
/// requirements (d0 on the grid, spacing <= linewidth / 4). Throws
/// InvalidParameter listing all violations; never clamps.
ValidatedConfig validate(const MaterialParams& material, const LaserParams& laser,
                         const FrequencyGrid& grid);

/// Throws InvalidParameter if `violations` is non-empty.
void throw_if_any(std::vector<Violation> violations);

} // namespace shb
