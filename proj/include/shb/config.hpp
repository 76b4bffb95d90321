#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shb/core.hpp"
#include "shb/diffusion.hpp"
#include "shb/dipolar.hpp"
#include "shb/pulse.hpp"
#include "shb/rate_solver.hpp"
#include "shb/zeeman.hpp"

namespace shb {

struct NamedPulse {
  std::string name;
  PulseShape shape;
};

struct PulseSetup {
  std::vector<NamedPulse> pulses;
  double sample_rate = 0.0;  // Hz, AWG rate
  /// Baseband grid on which spectra are written.
  FrequencyGrid spectrum_grid;
};

struct ZeemanSetup {
  Eigen::Vector3d direction = Eigen::Vector3d::Ones();  // normalized on load
  double field_start = 0.1;                              // T
  double field_stop = 2.0;                               // T
  std::size_t points = 20;
  double delta_field = 1.6e-3;  // T, along `direction`
  std::optional<double> pattern_field;  // T
  BranchWeights branch_weights;
};

/// One measured width series, read from CSV (t_s, fwhm_hz[, sigma_hz]).
struct WidthSeriesFile {
  double field = 0.0;  // T
  std::filesystem::path path;
};

struct DiffusionSetup {
  enum class Mode { Synthetic, Measured };
  Mode mode = Mode::Synthetic;
  /// Generating parameters (Synthetic) and the sech^2 inputs (both modes).
  DiffusionModel truth;
  /// K in Hz/T^2; taken from the spin model's tensors when not given.
  std::optional<double> tensor_norm;
  std::vector<double> fields;  // T
  double delay_min = 1.0;      // s
  double delay_max = 300.0;    // s
  std::size_t delay_points = 20;
  /// Absolute width noise as a fraction of gamma_0.
  double noise_fraction = 0.02;
  std::vector<WidthSeriesFile> series;
};

struct DipolarSetup {
  std::vector<SpinSpecies> species;
  double geometric_factor = 1.0;
};

struct ExperimentConfig {
  std::optional<FrequencyGrid> grid;
  std::optional<MaterialParams> material;
  std::optional<LaserParams> laser;
  std::optional<BurnSequence> sequence;
  std::optional<double> burn_sample_rate;
  std::optional<PulseSetup> pulse;
  std::optional<SpinModel> spin;
  std::vector<SiteClass> classes = default_site_classes();
  std::optional<ZeemanSetup> zeeman;
  std::optional<DiffusionSetup> diffusion;
  std::optional<DipolarSetup> dipolar;
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
};

/// Parses TOML text. Every section present is validated and every unknown
/// key is rejected; all problems are reported together via InvalidParameter.
/// Relative paths inside the file resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace shb
