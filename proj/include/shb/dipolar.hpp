#pragma once

#include <string>
#include <vector>

#include "shb/errors.hpp"

namespace shb {

struct SpinSpecies {
  std::string name;
  double concentration = 0.0;  // fraction
  double g_eff = 0.0;
  double avg_distance = 0.0;  // m

  std::vector<Violation> violations() const;
};

/// Point-dipole estimate (mu0 / 4 pi) g_eff mu_B / r^3 times an angular
/// factor, in tesla.
double dipolar_field(const SpinSpecies& s, double geometric_factor = 1.0);

struct SpeciesEstimate {
  SpinSpecies species;
  double field = 0.0;  // T
  bool dominant = false;
};

/// Estimates sorted by descending field; equal fields keep input order and
/// the first of them is flagged dominant. Throws InvalidParameter on an
/// empty list.
std::vector<SpeciesEstimate> species_table(const std::vector<SpinSpecies>& species, double geometric_factor = 1.0);

/// Host and dopant spins of Tm:YGG with the concentrations, effective g
/// factors and mean distances commonly quoted for the garnet lattice.
std::vector<SpinSpecies> garnet_host_species();

} // namespace shb
