#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shb/core.hpp"
#include "shb/parallel.hpp"

namespace shb {

/// Gated CW burn: constant amplitude, no frequency offset.
struct Rectangular {
  bool operator==(const Rectangular&) const = default;
};

/// Adiabatic hyperbolic-secant chirp: A(t) = sech(beta (t - t_mid)) cut to
/// zero where it falls to `truncation`, f(t) = (B/2) tanh(beta (t - t_mid)).
struct HyperbolicSecant {
  double chirp_bandwidth = 0.0;
  /// beta in 1/s. When unset it is chosen so the envelope reaches
  /// `truncation` exactly at the pulse edges.
  std::optional<double> steepness;
  double truncation = 0.01;

  bool operator==(const HyperbolicSecant&) const = default;
};

/// Serrodyne-style linear sweep across the bandwidth at constant amplitude.
struct LinearChirp {
  double chirp_bandwidth = 0.0;

  bool operator==(const LinearChirp&) const = default;
};

struct PulseShape {
  double duration = 0.0;
  /// Overrides the laser's rate amplitude a for bursts of this shape.
  std::optional<double> peak_rate_amplitude;
  std::variant<Rectangular, HyperbolicSecant, LinearChirp> form;

  double chirp_bandwidth() const;
  /// Effective beta for HyperbolicSecant, 0 for the other variants.
  double steepness() const;
  std::string_view kind_name() const;

  std::vector<Violation> violations() const;
  /// Non-fatal notes, e.g. a time-bandwidth product too small for adiabatic passage.
  std::vector<std::string> advisories() const;

  bool operator==(const PulseShape&) const = default;
};

/// Two-channel AWG description of a pulse: amplitude for the AOM and
/// instantaneous frequency for the phase modulator.
struct SampledWaveform {
  double sample_rate = 0.0;
  std::vector<double> amplitude;                // normalized to [0, 1]
  std::vector<double> instantaneous_frequency;  // Hz
  double amplitude_delay = 0.0;                 // s, amplitude channel lag

  std::size_t size() const { return amplitude.size(); }
  double duration() const { return static_cast<double>(size() - 1) / sample_rate; }
  double time(std::size_t k) const { return static_cast<double>(k) / sample_rate; }

  /// Complex envelope A(t) exp(i 2 pi \int f dt), phase accumulated with the
  /// trapezoidal rule from the first sample.
  std::vector<std::complex<double>> envelope() const;
};

/// 16 x (chirp bandwidth + 1/duration).
double minimum_sample_rate(const PulseShape& shape);

/// Throws InvalidShape for an invalid shape and NyquistViolation when the
/// sample rate is below minimum_sample_rate(shape).
SampledWaveform synthesize(const PulseShape& shape, double sample_rate, double amplitude_delay = 0.0);

/// Unnormalized |F(u)|^2 of the complex envelope at baseband offsets u (Hz),
/// with time measured from the pulse midpoint.
std::vector<double> spectral_power_at(const SampledWaveform& w, std::span<const double> offsets,
                                      unsigned workers = default_workers());

/// |F|^2 on the grid, bin i evaluated at offset grid.offset(i), normalized to
/// a peak of 1. Throws GridUnresolvable when grid.span > sample_rate / 2.
SpectralArray power_spectrum(const SampledWaveform& w, const FrequencyGrid& grid,
                             unsigned workers = default_workers());

/// Power at +/- fraction * bandwidth (the larger side) relative to the
/// in-band peak, in dB. fraction = 0.75 probes 1.5x the half-bandwidth.
double out_of_band_suppression_db(const SampledWaveform& w, double bandwidth, double fraction = 0.75);

/// Excitation rate R(delta). Without a pulse spectrum this is the closed-form
/// Lorentzian a nu^2 / (nu^2 + (delta - delta_o)^2). With one, the spectrum
/// (a baseband shape centred on the grid centre) is convolved with the laser
/// Lorentzian (centred on delta_o) and the homogeneous line, then scaled to a
/// peak of a. Throws GridMismatch when pulse_spec is on another grid.
SpectralArray excitation_rate(const LaserParams& laser, const MaterialParams& material,
                              const std::optional<SpectralArray>& pulse_spec, const FrequencyGrid& grid);

/// R(delta) for one burn of the given shape. Rectangular burns use the
/// closed-form Lorentzian; chirped shapes are synthesized and convolved.
/// The sample rate defaults to max(minimum_sample_rate, 2.5 x grid span).
SpectralArray burn_excitation_rate(const PulseShape& shape, const LaserParams& laser,
                                   const MaterialParams& material, const FrequencyGrid& grid,
                                   std::optional<double> sample_rate = std::nullopt);

} // namespace shb
