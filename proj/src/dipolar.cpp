#include "shb/dipolar.hpp"

#include <algorithm>
#include <cmath>

#include "shb/constants.hpp"
#include "shb/core.hpp"

namespace shb {

std::vector<Violation> SpinSpecies::violations() const {
  std::vector<Violation> v;
  const std::string f = "species." + (name.empty() ? std::string("?") : name);
  if (!(concentration >= 0.0 && concentration <= 1.0)) v.push_back({f + ".concentration", "must lie in [0, 1]"});
  if (!(g_eff >= 0.0) || !std::isfinite(g_eff)) v.push_back({f + ".g_eff", "must be finite and >= 0"});
  if (!(avg_distance > 0.0) || !std::isfinite(avg_distance)) v.push_back({f + ".distance", "must be finite and > 0"});
  return v;
}

double dipolar_field(const SpinSpecies& s, double geometric_factor) {
  throw_if_any(s.violations());
  const double r3 = s.avg_distance * s.avg_distance * s.avg_distance;
  return constants::mu0_over_4pi * s.g_eff * constants::bohr_magneton / r3 * geometric_factor;
}

std::vector<SpeciesEstimate> species_table(const std::vector<SpinSpecies>& species, double geometric_factor) {
  if (species.empty()) throw InvalidParameter("species", "species list is empty");
  std::vector<Violation> v;
  for (const auto& s : species) {
    auto more = s.violations();
    v.insert(v.end(), more.begin(), more.end());
  }
  if (!(geometric_factor >= 0.0) || !std::isfinite(geometric_factor))
    v.push_back({"geometric_factor", "must be finite and >= 0"});
  throw_if_any(std::move(v));

  std::vector<SpeciesEstimate> out;
  out.reserve(species.size());
  for (const auto& s : species) out.push_back({s, dipolar_field(s, geometric_factor), false});
  std::stable_sort(out.begin(), out.end(),
                   [](const SpeciesEstimate& a, const SpeciesEstimate& b) { return a.field > b.field; });
  out.front().dominant = true;
  return out;
}

std::vector<SpinSpecies> garnet_host_species() {
  constexpr double angstrom = 1e-10;
  return {
      {"Tm169", 0.01, 0.0077, 17 * angstrom},
      {"Ga71", 0.40, 0.00071, 2.6 * angstrom},
      {"Ga69", 0.60, 0.00092, 2.6 * angstrom},
      {"Y89", 0.99, 0.00014, 4 * angstrom},
  };
}

} // namespace shb
