#include "shb/pulse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "shb/constants.hpp"
#include "shb/lorentzian.hpp"

namespace shb {

using constants::pi;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sech(double x) {
  const double e = std::exp(-std::abs(x));
  return 2.0 * e / (1.0 + e * e);
}

// Envelope edge position (from the midpoint) where sech drops to `truncation`.
double truncation_half_width(double steepness, double truncation) {
  return std::acosh(1.0 / truncation) / steepness;
}

} // namespace

double PulseShape::chirp_bandwidth() const {
  return std::visit(overloaded{[](const Rectangular&) { return 0.0; },
                               [](const HyperbolicSecant& hs) { return hs.chirp_bandwidth; },
                               [](const LinearChirp& lc) { return lc.chirp_bandwidth; }},
                    form);
}

double PulseShape::steepness() const {
  const auto* hs = std::get_if<HyperbolicSecant>(&form);
  if (!hs) return 0.0;
  if (hs->steepness) return *hs->steepness;
  return 2.0 * std::acosh(1.0 / hs->truncation) / duration;
}

std::string_view PulseShape::kind_name() const {
  return std::visit(overloaded{[](const Rectangular&) { return std::string_view("rectangular"); },
                               [](const HyperbolicSecant&) { return std::string_view("hyperbolic_secant"); },
                               [](const LinearChirp&) { return std::string_view("linear_chirp"); }},
                    form);
}

std::vector<Violation> PulseShape::violations() const {
  std::vector<Violation> v;
  if (!(duration > 0.0)) v.push_back({"pulse.duration", "duration must be > 0"});
  if (peak_rate_amplitude && !(*peak_rate_amplitude >= 0.0))
    v.push_back({"pulse.peak_rate_amplitude", "must be >= 0"});
  if (!(chirp_bandwidth() >= 0.0)) v.push_back({"pulse.chirp_bandwidth", "must be >= 0"});
  if (const auto* hs = std::get_if<HyperbolicSecant>(&form)) {
    if (!(hs->truncation > 0.0 && hs->truncation < 1.0))
      v.push_back({"pulse.truncation", "must lie in (0, 1)"});
    if (hs->steepness && !(*hs->steepness > 0.0)) v.push_back({"pulse.steepness", "beta must be > 0"});
    if (v.empty() && hs->steepness) {
      const double needed = truncation_half_width(*hs->steepness, hs->truncation);
      if (0.5 * duration < needed * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "duration " << duration << " s cannot hold the sech envelope down to truncation "
           << hs->truncation << " (needs " << 2.0 * needed << " s at beta = " << *hs->steepness << ")";
        v.push_back({"pulse.steepness", os.str()});
      }
    }
  }
  return v;
}

std::vector<std::string> PulseShape::advisories() const {
  std::vector<std::string> notes;
  if (std::holds_alternative<Rectangular>(form)) return notes;
  const double tbp = chirp_bandwidth() * duration;
  if (tbp < 10.0) {
    std::ostringstream os;
    os << kind_name() << " pulse has bandwidth x duration = " << tbp
       << " < 10; the sweep is not adiabatic and the spectrum will not be flat-topped";
    notes.push_back(os.str());
  }
  return notes;
}

std::vector<std::complex<double>> SampledWaveform::envelope() const {
  std::vector<std::complex<double>> s(size());
  double phase = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k > 0)
      phase += pi * (instantaneous_frequency[k - 1] + instantaneous_frequency[k]) / sample_rate;
    s[k] = std::polar(amplitude[k], phase);
  }
  return s;
}

double minimum_sample_rate(const PulseShape& shape) {
  return 16.0 * (shape.chirp_bandwidth() + 1.0 / shape.duration);
}

SampledWaveform synthesize(const PulseShape& shape, double sample_rate, double amplitude_delay) {
  if (auto v = shape.violations(); !v.empty()) {
    std::string msg;
    for (const auto& x : v) msg += x.field + ": " + x.constraint + "; ";
    throw InvalidShape(msg);
  }
  const double required = minimum_sample_rate(shape);
  if (!(sample_rate >= required)) {
    std::ostringstream os;
    os << "sample rate " << sample_rate << " Hz is below 16 x (bandwidth + 1/duration) = " << required << " Hz";
    throw NyquistViolation(os.str());
  }

  // Odd sample count with (n-1)/fs >= duration puts one sample exactly on the
  // midpoint and keeps the sampled envelope symmetric.
  const auto half = static_cast<std::size_t>(std::ceil(0.5 * shape.duration * sample_rate - 1e-9));
  const std::size_t n = 2 * half + 1;

  SampledWaveform w;
  w.sample_rate = sample_rate;
  w.amplitude_delay = amplitude_delay;
  w.amplitude.assign(n, 1.0);
  w.instantaneous_frequency.assign(n, 0.0);

  const double bandwidth = shape.chirp_bandwidth();
  const double span_time = static_cast<double>(n - 1) / sample_rate;

  std::visit(overloaded{
                 [](const Rectangular&) {},
                 [&](const HyperbolicSecant& hs) {
                   const double beta = shape.steepness();
                   // Cut in the time domain so a sample sitting on the nominal
                   // edge is dropped despite rounding in sech.
                   const double edge = truncation_half_width(beta, hs.truncation) * (1.0 - 1e-12);
                   for (std::size_t k = 0; k < n; ++k) {
                     const double t = (static_cast<double>(k) - static_cast<double>(half)) / sample_rate;
                     const double a = sech(beta * (t - amplitude_delay));
                     w.amplitude[k] = std::abs(t - amplitude_delay) >= edge || a <= hs.truncation ? 0.0 : a;
                     w.instantaneous_frequency[k] = 0.5 * bandwidth * std::tanh(beta * t);
                   }
                 },
                 [&](const LinearChirp&) {
                   for (std::size_t k = 0; k < n; ++k) {
                     const double t = (static_cast<double>(k) - static_cast<double>(half)) / sample_rate;
                     w.instantaneous_frequency[k] = bandwidth * t / span_time;
                   }
                 }},
             shape.form);
  return w;
}

std::vector<double> spectral_power_at(const SampledWaveform& w, std::span<const double> offsets, unsigned workers) {
  const auto s = w.envelope();
  const double t0 = -0.5 * w.duration();
  std::vector<double> out(offsets.size());
  parallel_for(offsets.size(), workers, [&](std::size_t i) {
    const double u = offsets[i];
    const std::complex<double> step = std::polar(1.0, -2.0 * pi * u / w.sample_rate);
    std::complex<double> rot = std::polar(1.0, -2.0 * pi * u * t0);
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      acc += s[k] * rot;
      rot *= step;
      if ((k & 1023u) == 1023u) rot /= std::abs(rot);
    }
    acc /= w.sample_rate;
    out[i] = std::norm(acc);
  });
  return out;
}

SpectralArray power_spectrum(const SampledWaveform& w, const FrequencyGrid& grid, unsigned workers) {
  throw_if_any(grid.violations());
  if (grid.span > 0.5 * w.sample_rate) {
    std::ostringstream os;
    os << "grid span " << grid.span << " Hz exceeds half the sample rate (" << 0.5 * w.sample_rate << " Hz)";
    throw GridUnresolvable(os.str());
  }
  std::vector<double> offsets(grid.bin_count);
  for (std::size_t i = 0; i < grid.bin_count; ++i) offsets[i] = grid.offset(i);
  auto power = spectral_power_at(w, offsets, workers);
  const double peak = *std::max_element(power.begin(), power.end());
  if (peak > 0.0)
    for (auto& p : power) p /= peak;
  return SpectralArray{grid, std::move(power), Quantity::Rate};
}

double out_of_band_suppression_db(const SampledWaveform& w, double bandwidth, double fraction) {
  constexpr std::size_t dense = 1601;
  std::vector<double> probe(dense);
  const double reach = 0.6 * bandwidth + 2.0 / w.duration();
  for (std::size_t i = 0; i < dense; ++i)
    probe[i] = -reach + 2.0 * reach * static_cast<double>(i) / static_cast<double>(dense - 1);
  const auto inband = spectral_power_at(w, probe);
  const double peak = *std::max_element(inband.begin(), inband.end());

  const std::array<double, 2> edges{-fraction * bandwidth, fraction * bandwidth};
  const auto outside = spectral_power_at(w, edges);
  const double worst = std::max(outside[0], outside[1]);
  return 10.0 * std::log10(worst / peak);
}

SpectralArray excitation_rate(const LaserParams& laser, const MaterialParams& material,
                              const std::optional<SpectralArray>& pulse_spec, const FrequencyGrid& grid) {
  const double a = laser.rate_amplitude;
  const double nu = laser.linewidth;
  SpectralArray rate = SpectralArray::zeros(grid, Quantity::Rate);

  if (!pulse_spec) {
    for (std::size_t i = 0; i < grid.bin_count; ++i) {
      const double d = grid.detuning(i) - laser.center_detuning;
      rate[i] = a * nu * nu / (nu * nu + d * d);
    }
    return rate;
  }

  require_same_grid(grid, pulse_spec->grid, "pulse spectrum");
  const std::array<LorentzianKernel, 2> kernels{
      LorentzianKernel{nu, laser.center_detuning - grid.center_detuning},
      LorentzianKernel{0.5 * material.homogeneous_linewidth, 0.0}};
  auto y = convolve_lorentzians(pulse_spec->values, grid.spacing(), kernels);
  // Round-off from the transform can leave -1e-17 residue where the true value is ~0.
  for (auto& v : y) v = std::max(v, 0.0);
  const double peak = *std::max_element(y.begin(), y.end());
  if (peak > 0.0)
    for (std::size_t i = 0; i < y.size(); ++i) rate[i] = a * y[i] / peak;
  return rate;
}

SpectralArray burn_excitation_rate(const PulseShape& shape, const LaserParams& laser,
                                   const MaterialParams& material, const FrequencyGrid& grid,
                                   std::optional<double> sample_rate) {
  LaserParams effective = laser;
  if (shape.peak_rate_amplitude) effective.rate_amplitude = *shape.peak_rate_amplitude;
  if (std::holds_alternative<Rectangular>(shape.form)) {
    throw_if_any(shape.violations());
    return excitation_rate(effective, material, std::nullopt, grid);
  }
  const double fs = sample_rate.value_or(std::max(minimum_sample_rate(shape), 2.5 * grid.span));
  const auto waveform = synthesize(shape, fs);
  return excitation_rate(effective, material, power_spectrum(waveform, grid), grid);
}

} // namespace shb
