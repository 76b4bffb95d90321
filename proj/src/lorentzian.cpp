#include "shb/lorentzian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

#include "shb/constants.hpp"

namespace shb {

using constants::pi;

double lorentzian_density(double x, double hwhm) {
  return hwhm / (pi * (x * x + hwhm * hwhm));
}

std::vector<double> convolve_lorentzians(std::span<const double> values, double spacing,
                                         std::span<const LorentzianKernel> kernels,
                                         std::size_t padding_factor) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  const std::size_t m = std::max<std::size_t>(1, padding_factor) * n;

  std::vector<std::complex<double>> buffer(m, 0.0);
  std::copy(values.begin(), values.end(), buffer.begin());

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, buffer);

  const double ds = 1.0 / (static_cast<double>(m) * spacing);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = (k <= m / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(m)) * ds;
    // Shift phase at the Nyquist bin is ambiguous; the real part is taken below.
    for (const auto& kernel : kernels)
      spectrum[k] *= std::polar(std::exp(-2.0 * pi * kernel.hwhm * std::abs(s)), -2.0 * pi * kernel.center * s);
  }

  fft.inv(buffer, spectrum);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buffer[i].real();
  return out;
}

double half_max_width(const SpectralArray& spectrum) {
  const auto& y = spectrum.values;
  const std::size_t peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[peak];
  const double h = spectrum.grid.spacing();

  std::size_t left = peak;
  while (left > 0 && y[left - 1] >= half) --left;
  std::size_t right = peak;
  while (right + 1 < y.size() && y[right + 1] >= half) ++right;

  double lo = static_cast<double>(left);
  if (left > 0) lo -= (y[left] - half) / (y[left] - y[left - 1]);
  double hi = static_cast<double>(right);
  if (right + 1 < y.size()) hi += (y[right] - half) / (y[right] - y[right + 1]);
  return (hi - lo) * h;
}

} // namespace shb
