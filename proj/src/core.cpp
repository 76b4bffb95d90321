#include "shb/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace shb {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void append(std::vector<Violation>& into, std::vector<Violation> more) {
  into.insert(into.end(), std::make_move_iterator(more.begin()),
              std::make_move_iterator(more.end()));
}

} // namespace

double FrequencyGrid::offset(std::size_t i) const {
  return (static_cast<double>(i) - 0.5 * static_cast<double>(bin_count - 1)) * spacing();
}

double FrequencyGrid::detuning(std::size_t i) const { return center_detuning + offset(i); }

std::vector<double> FrequencyGrid::detunings() const {
  std::vector<double> out(bin_count);
  for (std::size_t i = 0; i < bin_count; ++i) out[i] = detuning(i);
  return out;
}

std::size_t FrequencyGrid::nearest_bin(double d) const {
  const double pos = (d - center_detuning) / spacing() + 0.5 * static_cast<double>(bin_count - 1);
  const double clamped = std::clamp(std::round(pos), 0.0, static_cast<double>(bin_count - 1));
  return static_cast<std::size_t>(clamped);
}

std::vector<Violation> FrequencyGrid::violations() const {
  std::vector<Violation> v;
  if (bin_count < 3) v.push_back({"grid.bins", "bin_count must be >= 3"});
  if (!(span > 0.0) || !std::isfinite(span)) v.push_back({"grid.span", "span must be finite and > 0"});
  if (!std::isfinite(center_detuning)) v.push_back({"grid.center", "center must be finite"});
  return v;
}

std::string_view to_string(Quantity q) {
  switch (q) {
  case Quantity::Population: return "population";
  case Quantity::Rate: return "rate";
  case Quantity::OpticalDepth: return "optical depth";
  }
  return "?";
}

SpectralArray SpectralArray::constant(const FrequencyGrid& grid, double value, Quantity quantity) {
  return SpectralArray{grid, std::vector<double>(grid.bin_count, value), quantity};
}

double SpectralArray::max() const { return *std::max_element(values.begin(), values.end()); }
double SpectralArray::min() const { return *std::min_element(values.begin(), values.end()); }

std::vector<Violation> SpectralArray::violations(std::string_view name) const {
  std::vector<Violation> v;
  const std::string field(name);
  if (values.size() != grid.bin_count) {
    v.push_back({field, "length " + std::to_string(values.size()) + " does not match grid bin_count " +
                            std::to_string(grid.bin_count)});
    return v;
  }
  // Propagated populations may carry rounding-level excursions outside [0, 1].
  constexpr double slack = 1e-12;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    if (!std::isfinite(x)) {
      v.push_back({field, "non-finite value at bin " + std::to_string(i)});
      break;
    }
    if (quantity == Quantity::Population && (x < -slack || x > 1.0 + slack)) {
      v.push_back({field, "population " + fmt_num(x) + " outside [0, 1] at bin " + std::to_string(i)});
      break;
    }
    if (quantity != Quantity::Population && x < 0.0) {
      v.push_back({field, std::string(to_string(quantity)) + " must be >= 0, got " + fmt_num(x) +
                              " at bin " + std::to_string(i)});
      break;
    }
  }
  return v;
}

void require_same_grid(const FrequencyGrid& expected, const FrequencyGrid& actual, std::string_view what) {
  if (!(expected == actual)) {
    throw GridMismatch(std::string(what) + " is defined on a different frequency grid (" +
                       std::to_string(actual.bin_count) + " bins, span " + fmt_num(actual.span) +
                       " Hz) than expected (" + std::to_string(expected.bin_count) + " bins, span " +
                       fmt_num(expected.span) + " Hz)");
  }
}

std::vector<Violation> MaterialParams::violations() const {
  std::vector<Violation> v;
  if (!(excited_lifetime > 0.0)) v.push_back({"material.excited_lifetime", "excited-state lifetime must be > 0"});
  if (!(bottleneck_lifetime > 0.0)) v.push_back({"material.bottleneck_lifetime", "bottleneck lifetime must be > 0"});
  if (std::isnan(branching_ratio))
    v.push_back({"material.zeta", "branching ratio is required (no default)"});
  else if (!(branching_ratio >= 0.0 && branching_ratio <= 1.0))
    v.push_back({"material.zeta", "branching ratio must lie in [0, 1], got " + fmt_num(branching_ratio)});
  if (!(homogeneous_linewidth > 0.0)) v.push_back({"material.homogeneous_linewidth", "homogeneous linewidth must be > 0"});
  if (background_od.quantity != Quantity::OpticalDepth)
    v.push_back({"material.background_od", "background must be tagged as optical depth"});
  append(v, background_od.violations("material.background_od"));
  return v;
}

std::vector<Violation> LaserParams::violations() const {
  std::vector<Violation> v;
  if (!(linewidth > 0.0)) v.push_back({"laser.linewidth", "linewidth nu must be > 0"});
  if (!(rate_amplitude >= 0.0)) v.push_back({"laser.rate_amplitude", "rate amplitude a must be >= 0"});
  if (!std::isfinite(center_detuning)) v.push_back({"laser.center", "center detuning must be finite"});
  return v;
}

PopulationState PopulationState::all_ground(const FrequencyGrid& grid, double timestamp) {
  return PopulationState{SpectralArray::constant(grid, 1.0, Quantity::Population),
                         SpectralArray::zeros(grid, Quantity::Population),
                         SpectralArray::zeros(grid, Quantity::Population), timestamp};
}

double PopulationState::conservation_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < ground.size(); ++i)
    worst = std::max(worst, std::abs(ground[i] + excited[i] + bottleneck[i] - 1.0));
  return worst;
}

std::vector<Violation> PopulationState::violations() const {
  std::vector<Violation> v;
  append(v, ground.violations("n_g"));
  append(v, excited.violations("n_e"));
  append(v, bottleneck.violations("n_b"));
  if (!(ground.grid == excited.grid) || !(ground.grid == bottleneck.grid))
    v.push_back({"state", "level arrays live on different grids"});
  if (v.empty() && conservation_error() > conservation_tolerance)
    v.push_back({"state", "n_g + n_e + n_b deviates from 1 by " + fmt_num(conservation_error())});
  return v;
}

void throw_if_any(std::vector<Violation> violations) {
  if (!violations.empty()) throw InvalidParameter(std::move(violations));
}

ValidatedConfig validate(const MaterialParams& material, const LaserParams& laser, const FrequencyGrid& grid) {
  std::vector<Violation> v = grid.violations();
  append(v, material.violations());
  append(v, laser.violations());
  if (v.empty()) {
    if (!(material.background_od.grid == grid))
      v.push_back({"material.background_od", "background optical depth is not defined on the simulation grid"});
    if (grid.spacing() > laser.linewidth / 4.0)
      v.push_back({"grid.spacing", "grid resolution: spacing " + fmt_num(grid.spacing()) +
                                       " Hz exceeds linewidth/4 = " + fmt_num(laser.linewidth / 4.0) + " Hz"});
  }
  throw_if_any(std::move(v));
  return ValidatedConfig{material, laser, grid};
}

} // namespace shb
