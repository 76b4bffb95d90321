#include "shb/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "levenberg_marquardt.hpp"
#include "shb/constants.hpp"

namespace shb {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + n / 2));
  return m;
}

// Gaussian-equivalent noise from the MAD of second differences, which
// suppresses any smooth feature.
double noise_estimate(const std::vector<double>& y) {
  if (y.size() < 5) return 0.0;
  std::vector<double> d2(y.size() - 2);
  for (std::size_t i = 0; i + 2 < y.size(); ++i) d2[i] = y[i] - 2.0 * y[i + 1] + y[i + 2];
  const double m = median(d2);
  for (auto& x : d2) x = std::abs(x - m);
  return 1.4826 * median(d2) / std::sqrt(6.0);
}

double sech_squared(double x) {
  const double e = std::exp(-std::abs(x));
  const double s = 2.0 * e / (1.0 + e * e);
  return s * s;
}

} // namespace

std::vector<Violation> DiffusionModel::violations() const {
  std::vector<Violation> v;
  const std::pair<const char*, double> fields[] = {{"gamma_0", gamma_0},         {"gamma_sd", gamma_sd},
                                                   {"rate_rs", rate_rs},         {"gamma_max0", gamma_max0},
                                                   {"b_noise", b_noise},         {"g_env", g_env},
                                                   {"temperature", temperature}};
  for (const auto& [name, value] : fields)
    if (!(value >= 0.0) || !std::isfinite(value))
      v.push_back({std::string("diffusion.") + name, "must be finite and >= 0, got " + fmt_num(value)});
  return v;
}

LorentzianFit fit_lorentzian(const SpectralArray& spectrum) {
  const std::size_t n = spectrum.size();
  if (n < 5) throw InsufficientData("a Lorentzian fit needs at least 5 bins");
  const auto& y = spectrum.values;
  const double x_mid = spectrum.grid.center_detuning;
  const double x_scale = 0.5 * spectrum.grid.span;
  std::vector<double> xn(n);
  for (std::size_t i = 0; i < n; ++i) xn[i] = spectrum.grid.offset(i) / x_scale;

  const double baseline0 = median(y);
  const std::size_t imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  const double depth0 = baseline0 - y[imin];
  const double sigma = noise_estimate(y);
  if (!(depth0 > 5.0 * sigma))
    throw NoFeatureFound("deepest dip " + fmt_num(depth0) + " is below 5x the noise estimate " + fmt_num(sigma));

  const double half = baseline0 - 0.5 * depth0;
  std::size_t lo = imin, hi = imin;
  while (lo > 0 && y[lo] < half) --lo;
  while (hi + 1 < n && y[hi] < half) ++hi;
  const double h0 = std::max(0.5 * (xn[hi] - xn[lo]), 2.0 / static_cast<double>(n - 1));

  auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = xn[i] - p[2];
      r[i] = p[0] - p[1] * p[3] * p[3] / (u * u + p[3] * p[3]) - y[i];
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j(n, 4);
    const double d = p[1], h = p[3];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = xn[i] - p[2];
      const double q = u * u + h * h;
      j(i, 0) = 1.0;
      j(i, 1) = -h * h / q;
      j(i, 2) = -2.0 * d * h * h * u / (q * q);
      j(i, 3) = -2.0 * d * h * u * u / (q * q);
    }
    return j;
  };

  Eigen::VectorXd start(4);
  start << baseline0, depth0, xn[imin], h0;
  const auto res = detail::levenberg_marquardt(residual, jacobian, start);
  const auto& p = res.params;

  LorentzianFit fit;
  fit.baseline = p[0];
  fit.depth = p[1];
  fit.center = x_mid + p[2] * x_scale;
  fit.fwhm = 2.0 * std::abs(p[3]) * x_scale;
  fit.residual_rms = std::sqrt(res.cost / static_cast<double>(n));
  fit.converged = res.converged && p.allFinite() && fit.depth >= 0.0 && fit.fwhm > 0.0;
  if (fit.depth < 0.0) fit.depth = 0.0;
  return fit;
}

double hole_width_model(double t_delay, const DiffusionModel& m) {
  return m.gamma_0 - 0.5 * m.gamma_sd * std::expm1(-m.rate_rs * t_delay);
}

double gamma_sd_of_bt(double field, double temperature, double g_env, double gamma_max) {
  if (!(temperature > 0.0)) throw InvalidParameter("temperature", "temperature must be > 0, got " + fmt_num(temperature));
  const double x = g_env * constants::bohr_magneton * field / (constants::boltzmann * temperature);
  return gamma_max * sech_squared(x);
}

double gamma_max_of_b(double field, const DiffusionModel& m, double tensor_diff_norm) {
  if (!(field >= 0.0)) throw InvalidParameter("B", "field magnitude must be >= 0, got " + fmt_num(field));
  return tensor_diff_norm * field * m.b_noise + m.gamma_max0;
}

DiffusionFit fit_diffusion_timeseries(const std::vector<WidthPoint>& widths) {
  const std::size_t n = widths.size();
  if (n < 5) throw InsufficientData("need at least 5 width points, got " + std::to_string(n));
  bool weighted = true;
  double t_min_pos = std::numeric_limits<double>::infinity();
  double t_max = 0.0;
  for (const auto& w : widths) {
    if (!(w.t_delay >= 0.0) || !std::isfinite(w.fwhm))
      throw InvalidParameter("widths", "delays must be >= 0 and widths finite");
    if (w.sigma && !(*w.sigma > 0.0)) throw InvalidParameter("widths.sigma", "sigma must be > 0");
    weighted = weighted && w.sigma.has_value();
    if (w.t_delay > 0.0) t_min_pos = std::min(t_min_pos, w.t_delay);
    t_max = std::max(t_max, w.t_delay);
  }
  if (!(t_max >= 10.0 * t_min_pos))
    throw InsufficientData("delays must span at least one decade (" + fmt_num(t_min_pos) + " to " + fmt_num(t_max) + " s)");

  Eigen::VectorXd t(n), y(n), wt(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = widths[i].t_delay;
    y[i] = widths[i].fwhm;
    wt[i] = weighted ? 1.0 / *widths[i].sigma : 1.0;
  }

  // p = (gamma_0, gamma_sd, ln R_s); the log keeps R_s positive.
  auto residual = [&](const Eigen::VectorXd& p) {
    const double rs = std::exp(p[2]);
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = wt[i] * (p[0] - 0.5 * p[1] * std::expm1(-rs * t[i]) - y[i]);
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    const double rs = std::exp(p[2]);
    Eigen::MatrixXd j(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-rs * t[i]);
      j(i, 0) = wt[i];
      j(i, 1) = -0.5 * wt[i] * std::expm1(-rs * t[i]);
      j(i, 2) = 0.5 * wt[i] * p[1] * rs * t[i] * e;
    }
    return j;
  };

  // Starts: for R_s on a grid of decades the model is linear in the two
  // widths, so each start solves that weighted linear problem first.
  detail::LmResult best;
  best.cost = std::numeric_limits<double>::infinity();
  const double lo = std::floor(std::log10(0.01 / t_max));
  const double hi = std::ceil(std::log10(100.0 / t_min_pos));
  for (double dec = lo; dec <= hi; dec += 0.5) {
    const double rs = std::pow(10.0, dec);
    Eigen::MatrixXd a(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, 0) = wt[i];
      a(i, 1) = -0.5 * wt[i] * std::expm1(-rs * t[i]);
    }
    const Eigen::Vector2d lin = a.colPivHouseholderQr().solve(wt.cwiseProduct(y));
    Eigen::VectorXd start(3);
    start << lin[0], lin[1], std::log(rs);
    auto res = detail::levenberg_marquardt(residual, jacobian, start);
    if (res.params.allFinite() && res.cost < best.cost) best = std::move(res);
  }
  if (!std::isfinite(best.cost)) throw DegenerateFit("no start converged to a finite solution");

  const double rs = std::exp(best.params[2]);
  if (rs * t_max < 0.1)
    throw DegenerateFit("fitted R_s = " + fmt_num(rs) + " /s: every delay is in the linear regime, R_s is not constrained");
  if (rs * t_min_pos > 10.0)
    throw DegenerateFit("fitted R_s = " + fmt_num(rs) + " /s: every delay is saturated, R_s is not constrained");

  DiffusionFit fit;
  fit.gamma_0 = best.params[0];
  fit.gamma_sd = best.params[1];
  fit.rate_rs = rs;
  fit.chi2 = best.cost;

  const Eigen::MatrixXd jtj = best.jacobian.transpose() * best.jacobian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible()) throw DegenerateFit("Jacobian is rank deficient at the solution");
  Eigen::Matrix3d cov = lu.inverse();
  if (!weighted) cov *= n > 3 ? best.cost / static_cast<double>(n - 3) : 0.0;
  // d R_s = R_s d ln R_s.
  const Eigen::Vector3d chain(1.0, 1.0, rs);
  fit.covariance = chain.asDiagonal() * cov * chain.asDiagonal();
  if (!fit.covariance.allFinite()) throw DegenerateFit("parameter covariance is not finite");
  return fit;
}

BNoiseFit fit_bnoise(const std::vector<FieldPoint>& points, double tensor_diff_norm,
                     const std::optional<SechFactor>& sech) {
  if (!(tensor_diff_norm > 0.0))
    throw InvalidParameter("K", "tensor difference norm must be > 0, got " + fmt_num(tensor_diff_norm));
  const std::size_t n = points.size();
  if (n < 3) throw InsufficientData("need at least 3 field points, got " + std::to_string(n));

  bool weighted = true;
  std::vector<double> x(n), y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.field) || !std::isfinite(p.gamma_sd))
      throw InvalidParameter("field_points", "fields and widths must be finite");
    if (p.sigma && !(*p.sigma > 0.0)) throw InvalidParameter("field_points.sigma", "sigma must be > 0");
    weighted = weighted && p.sigma.has_value();
    const double factor = sech ? gamma_sd_of_bt(p.field, sech->temperature, sech->g_env, 1.0) : 1.0;
    x[i] = p.field;
    y[i] = p.gamma_sd / factor;
    w[i] = p.sigma ? factor * factor / (*p.sigma * *p.sigma) : 1.0;
  }
  if (!weighted) std::fill(w.begin(), w.end(), 1.0);
  if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end()))
    throw InsufficientData("all field points are at the same field");

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xb = sx / sw, yb = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xb) * (x[i] - xb);
    sxy += w[i] * (x[i] - xb) * (y[i] - yb);
  }
  BNoiseFit fit;
  fit.slope = sxy / sxx;
  fit.gamma_max0 = yb - fit.slope * xb;

  double var_slope = 1.0 / sxx;
  double var_icpt = 1.0 / sw + xb * xb / sxx;
  if (!weighted) {
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.gamma_max0 - fit.slope * x[i];
      chi2 += r * r;
    }
    const double s2 = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
    var_slope *= s2;
    var_icpt *= s2;
  }
  fit.gamma_max0_sigma = std::sqrt(var_icpt);
  fit.b_noise_sigma = std::sqrt(var_slope) / tensor_diff_norm;

  double y_scale = 0.0, x_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y_scale = std::max(y_scale, std::abs(y[i]));
    x_scale = std::max(x_scale, std::abs(x[i]));
  }
  const double tolerance = 1e-9 * y_scale / x_scale;
  if (std::abs(fit.slope) <= tolerance) {
    fit.b_noise = 0.0;
  } else if (fit.slope < 0.0) {
    fit.warnings.push_back("NegativeSlope: fitted slope " + fmt_num(fit.slope) +
                           " Hz/T is negative; b_noise left unset");
  } else {
    fit.b_noise = fit.slope / tensor_diff_norm;
  }
  return fit;
}

SplittingComparison equivalent_splitting_check(const std::vector<WidthPoint>& first,
                                               const std::vector<WidthPoint>& second) {
  if (first.empty() || second.empty()) throw InsufficientData("both width series must be non-empty");
  if (first.size() != second.size())
    throw MismatchedSampling("series have " + std::to_string(first.size()) + " and " +
                             std::to_string(second.size()) + " points");
  SplittingComparison out;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double t1 = first[i].t_delay, t2 = second[i].t_delay;
    if (std::abs(t1 - t2) > 1e-12 * std::max({std::abs(t1), std::abs(t2), 1e-300}))
      throw MismatchedSampling("delay " + fmt_num(t1) + " s does not match " + fmt_num(t2) + " s at index " +
                               std::to_string(i));
    if (!(first[i].fwhm > 0.0)) throw InvalidParameter("widths", "reference widths must be > 0");
    const double ratio = second[i].fwhm / first[i].fwhm;
    out.t_delay.push_back(t1);
    out.ratios.push_back(ratio);
    out.max_deviation = std::max(out.max_deviation, std::abs(ratio - 1.0));
  }
  out.comparable = out.max_deviation < comparable_tolerance;
  return out;
}

} // namespace shb
