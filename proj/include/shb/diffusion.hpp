#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shb/core.hpp"

namespace shb {

struct LorentzianFit {
  double center = 0.0;    // Hz
  double fwhm = 0.0;      // Hz
  double depth = 0.0;     // OD
  double baseline = 0.0;  // OD
  double residual_rms = 0.0;
  bool converged = false;
};

struct DiffusionModel {
  double gamma_0 = 0.0;      // Hz, width at zero delay
  double gamma_sd = 0.0;     // Hz, full diffusion broadening
  double rate_rs = 0.0;      // 1/s, spin-flip rate
  double gamma_max0 = 0.0;   // Hz, zero-field offset of the broadening
  double b_noise = 0.0;      // T
  double g_env = 0.0;        // g-factor of the flipping environment spins
  double temperature = 0.0;  // K

  std::vector<Violation> violations() const;
};

/// Hole readout cadence used when simulating long delay series.
inline constexpr double default_readout_interval = 11.0;

/// Least-squares fit of baseline - depth (w/2)^2 / ((x - c)^2 + (w/2)^2).
/// Throws NoFeatureFound when the deepest dip is less than five times the
/// noise estimated from second differences.
LorentzianFit fit_lorentzian(const SpectralArray& spectrum);

/// Gamma_o + Gamma_SD / 2 * (1 - exp(-R_s t)).
double hole_width_model(double t_delay, const DiffusionModel& m);

/// Gamma_max sech^2(g_env mu_B B / (k T)).
double gamma_sd_of_bt(double field, double temperature, double g_env, double gamma_max);

/// K B b_noise + Gamma_max(0), K in Hz/T^2 (see tensor_difference_norm).
double gamma_max_of_b(double field, const DiffusionModel& m, double tensor_diff_norm);

struct WidthPoint {
  double t_delay = 0.0;  // s
  double fwhm = 0.0;     // Hz
  std::optional<double> sigma;  // Hz; the whole series is unweighted if any is missing
};

struct DiffusionFit {
  double gamma_0 = 0.0;
  double gamma_sd = 0.0;
  double rate_rs = 0.0;
  /// Order (gamma_0, gamma_sd, rate_rs). Absolute when sigmas were given,
  /// otherwise scaled by the reduced chi^2.
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double chi2 = 0.0;

  double sigma_gamma_0() const { return std::sqrt(covariance(0, 0)); }
  double sigma_gamma_sd() const { return std::sqrt(covariance(1, 1)); }
  double sigma_rate_rs() const { return std::sqrt(covariance(2, 2)); }
};

/// Throws InsufficientData (< 5 points, or delays spanning less than a
/// decade) and DegenerateFit when R_s is not constrained by the sampling.
DiffusionFit fit_diffusion_timeseries(const std::vector<WidthPoint>& widths);

struct FieldPoint {
  double field = 0.0;     // T
  double gamma_sd = 0.0;  // Hz
  std::optional<double> sigma;
};

struct BNoiseFit {
  /// Unset when the fitted slope is negative.
  std::optional<double> b_noise;
  double b_noise_sigma = 0.0;
  double gamma_max0 = 0.0;
  double gamma_max0_sigma = 0.0;
  double slope = 0.0;  // Hz/T
  std::vector<std::string> warnings;
};

struct SechFactor {
  double g_env = 0.0;
  double temperature = 0.0;
};

/// Weighted straight-line fit of Gamma_SD / sech^2(...) against B; the
/// slope divided by K is b_noise. Without `sech` the factor is taken as 1.
BNoiseFit fit_bnoise(const std::vector<FieldPoint>& points, double tensor_diff_norm,
                     const std::optional<SechFactor>& sech = std::nullopt);

struct SplittingComparison {
  std::vector<double> t_delay;
  std::vector<double> ratios;  // second / first
  double max_deviation = 0.0;
  bool comparable = false;
};

inline constexpr double comparable_tolerance = 0.15;

/// Throws MismatchedSampling unless both series share the same delays.
SplittingComparison equivalent_splitting_check(const std::vector<WidthPoint>& first,
                                               const std::vector<WidthPoint>& second);

} // namespace shb
