#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "shb/core.hpp"
#include "shb/parallel.hpp"
#include "shb/pulse.hpp"

namespace shb {

enum class SegmentKind { Burn, Wait };

struct PulseSegment {
  SegmentKind kind = SegmentKind::Wait;
  double duration = 0.0;
  /// Burn only. The shape's own duration sets its spectrum; the segment
  /// duration is how long that rate is applied.
  PulseShape shape;
  LaserParams laser;
  /// Number of equal sub-steps; with AfterEachSegment every sub-step is snapshotted.
  std::size_t substeps = 1;

  /// A burn whose shape duration defaults to the segment duration.
  static PulseSegment burn(double duration, const LaserParams& laser, PulseShape shape = {});
  static PulseSegment wait(double duration);

  std::vector<Violation> violations() const;
};

enum class SnapshotPolicy { AfterEachSegment, AfterEachCycle, FinalOnly };

/// A cycle is a run of segments starting at a burn that follows a non-burn
/// segment (or at the first segment).
struct BurnSequence {
  std::vector<PulseSegment> segments;
  SnapshotPolicy snapshot_policy = SnapshotPolicy::AfterEachCycle;

  static BurnSequence repeated(const std::vector<PulseSegment>& cycle, std::size_t count,
                               SnapshotPolicy policy = SnapshotPolicy::AfterEachCycle);

  std::vector<Violation> violations() const;
};

struct HoleEvolution {
  std::vector<double> times;
  std::vector<PopulationState> states;
  std::vector<SpectralArray> od_spectra;
  /// How many excitation-rate spectra were computed (one per distinct shape/laser pair).
  std::size_t distinct_rates = 0;

  std::size_t size() const { return times.size(); }
};

/// The 3x3 generator M for one bin, ordered (ground, excited, bottleneck).
/// Every column sums to zero.
using Generator = std::array<std::array<double, 3>, 3>;
Generator rate_generator(double rate, const MaterialParams& material);

/// exp(M dt) for R = 0 from the closed-form cascade solution.
Generator relaxation_propagator(const MaterialParams& material, double dt);

/// exp(M dt) for general R (scaling-and-squaring Pade).
Generator burn_propagator(double rate, const MaterialParams& material, double dt);

/// Advances every bin by dt. `rate` is the rate-tagged R on the state's
/// grid, or nullopt for a wait. Throws GridMismatch and NonFiniteState.
PopulationState propagate_segment(const PopulationState& state, const std::optional<SpectralArray>& rate,
                                  const MaterialParams& material, double dt,
                                  unsigned workers = default_workers());

struct RunOptions {
  unsigned workers = default_workers();
  /// AWG rate for synthesized chirped pulses; see burn_excitation_rate.
  std::optional<double> sample_rate;
};

/// Chains propagate_segment over the sequence starting from `initial`
/// (default: every bin fully in the ground state at t = 0). Snapshots
/// always include the initial state except under FinalOnly.
HoleEvolution run_sequence(const BurnSequence& seq, const MaterialParams& material, const FrequencyGrid& grid,
                           const std::optional<PopulationState>& initial = std::nullopt,
                           const RunOptions& options = {});

/// OD = d0 * n_g.
SpectralArray to_optical_depth(const PopulationState& state, const MaterialParams& material);

/// Convolves the hole feature (background - od) with a unit-area Lorentzian
/// of FWHM added_fwhm and returns background minus the broadened feature.
/// The feature is rescaled so its area over the grid is unchanged by the
/// wings leaving the window. Throws GridUnresolvable for
/// 0 < added_fwhm < 2 x spacing.
SpectralArray apply_diffusion_broadening(const SpectralArray& od, const SpectralArray& background,
                                         double added_fwhm);

/// background - od at the bin nearest `detuning`.
double hole_depth(const SpectralArray& od, const SpectralArray& background, double detuning);

/// Writes `index.csv` (snapshot, time_s, file) and one
/// `snapshot_NNNN.csv` (detuning_hz, od, n_g, n_e, n_b) per snapshot.
void write_evolution_csv(const HoleEvolution& evolution, const std::filesystem::path& directory);

} // namespace shb
