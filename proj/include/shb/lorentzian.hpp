#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shb/core.hpp"

namespace shb {

/// Unit-area Lorentzian with half width at half maximum `hwhm`, centred at
/// `center` (an offset on the same axis as the data it is convolved with).
struct LorentzianKernel {
  double hwhm = 0.0;
  double center = 0.0;
};

/// Unit-area Lorentzian density at x.
double lorentzian_density(double x, double hwhm);

inline constexpr std::size_t default_padding_factor = 4;

/// Linear convolution of uniformly sampled `values` (spacing `spacing`) with
/// the product of the given kernels, done in the Fourier domain on a
/// zero-padded buffer of padding_factor * n points. Kernels enter through
/// their analytic transforms exp(-2 pi hwhm |s| - 2 pi i center s), so
/// widths below the sample spacing are handled exactly and a zero-width
/// kernel is the identity. The output is the continuous convolution sampled
/// at the input positions.
std::vector<double> convolve_lorentzians(std::span<const double> values, double spacing,
                                         std::span<const LorentzianKernel> kernels,
                                         std::size_t padding_factor = default_padding_factor);

/// Full width at half maximum of the dominant peak, measured from linearly
/// interpolated half-maximum crossings on either side of the maximum.
double half_max_width(const SpectralArray& spectrum);

} // namespace shb
