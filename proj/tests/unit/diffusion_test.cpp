#include <catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shb/constants.hpp"
#include "shb/diffusion.hpp"

using namespace shb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralArray lorentzian_dip(const FrequencyGrid& g, double c, double w, double depth, double baseline,
                             oracle::Rng* rng = nullptr, double noise = 0.0) {
  auto s = SpectralArray::zeros(g, Quantity::OpticalDepth);
  for (std::size_t i = 0; i < g.bin_count; ++i) {
    const double x = (g.detuning(i) - c) / (w / 2);
    s[i] = baseline - depth / (1 + x * x) + (rng ? noise * rng->normal() : 0.0);
  }
  return s;
}

std::vector<double> log_delays(double lo, double hi, int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = lo * std::pow(hi / lo, k / double(n - 1));
  return t;
}

std::vector<WidthPoint> width_series(const DiffusionModel& m, const std::vector<double>& delays,
                                     oracle::Rng* rng = nullptr, double noise = 0.0) {
  std::vector<WidthPoint> out;
  for (double t : delays) out.push_back({t, hole_width_model(t, m) + (rng ? noise * rng->normal() : 0.0), {}});
  return out;
}

// Reference sech^2 factor written out from the Boltzmann ratio.
double sech2(double b, double g_env, double t) {
  const double x = g_env * constants::bohr_magneton * b / (constants::boltzmann * t);
  const double c = std::cosh(x);
  return 1.0 / (c * c);
}

} // namespace

TEST_CASE("Lorentzian fit recovers an exact dip") {
  const FrequencyGrid g{0.0, 200e3, 401};
  const auto fit = fit_lorentzian(lorentzian_dip(g, 0.0, 20e3, 0.5, 1.0));
  CHECK(fit.converged);
  CHECK_THAT(fit.center, WithinAbs(0.0, 1e-3 * 20e3));
  CHECK_THAT(fit.fwhm, WithinRel(20e3, 1e-3));
  CHECK_THAT(fit.depth, WithinRel(0.5, 1e-3));
  CHECK_THAT(fit.baseline, WithinRel(1.0, 1e-3));
  CHECK(fit.residual_rms < 1e-9);
}

TEST_CASE("Lorentzian fit tolerates 1% noise") {
  // 125 Hz bins: about 160 points across the FWHM keep the width scatter near 0.5%.
  const FrequencyGrid g{0.0, 200e3, 1601};
  int good = 0;
  for (int seed = 0; seed < 100; ++seed) {
    oracle::Rng rng(1000 + seed);
    const auto fit = fit_lorentzian(lorentzian_dip(g, 0.0, 20e3, 0.5, 1.0, &rng, 0.01));
    const bool ok = fit.converged && std::abs(fit.center) < 0.02 * 20e3 &&
                    std::abs(fit.fwhm / 20e3 - 1) < 0.02 && std::abs(fit.depth / 0.5 - 1) < 0.02 &&
                    std::abs(fit.baseline - 1) < 0.02;
    good += ok;
  }
  CHECK(good == 100);
}

TEST_CASE("Lorentzian fit finds an off-centre dip") {
  const FrequencyGrid g{150e6, 400e3, 801};
  const auto fit = fit_lorentzian(lorentzian_dip(g, 150e6 + 37e3, 12e3, 0.3, 2.0));
  CHECK_THAT(fit.center, WithinAbs(150e6 + 37e3, 1.0));
  CHECK_THAT(fit.fwhm, WithinRel(12e3, 1e-4));
}

TEST_CASE("flat spectrum has no feature") {
  const FrequencyGrid g{0.0, 200e3, 401};
  CHECK_THROWS_AS(fit_lorentzian(SpectralArray::constant(g, 1.0, Quantity::OpticalDepth)), NoFeatureFound);
  oracle::Rng rng(3);
  CHECK_THROWS_AS(fit_lorentzian(lorentzian_dip(g, 0.0, 20e3, 0.0, 1.0, &rng, 0.01)), NoFeatureFound);
}

TEST_CASE("width model limits") {
  const DiffusionModel m{10e3, 40e3, 0.05};
  CHECK(hole_width_model(0.0, m) == 10e3);
  CHECK_THAT(hole_width_model(1e6, m), WithinRel(30e3, 1e-12));
  CHECK_THAT(hole_width_model(20.0, m), WithinRel(10e3 + 20e3 * (1 - std::exp(-1.0)), 1e-14));
}

TEST_CASE("width model is monotone and concave") {
  oracle::Rng rng(41);
  for (int k = 0; k < 50; ++k) {
    const DiffusionModel m{rng.uniform(1e3, 50e3), rng.uniform(0.0, 100e3), rng.log_uniform(1e-3, 1.0)};
    double prev = hole_width_model(0.0, m), prev_step = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 500; ++i) {
      const double w = hole_width_model(i * 0.01 / m.rate_rs, m);
      CHECK(w >= prev);
      CHECK(w - prev <= prev_step * (1 + 1e-12) + 1e-9);
      prev_step = w - prev;
      prev = w;
    }
  }
}

TEST_CASE("thermal factor of the broadening") {
  CHECK(gamma_sd_of_bt(0.0, 0.6, 7.1e-4, 5e3) == 5e3);
  CHECK(gamma_sd_of_bt(1.0, 0.6, 7.1e-4, 0.0) == 0.0);
  const double factor = gamma_sd_of_bt(2.0, 0.6, 7.1e-4, 1.0);
  CHECK(std::abs(factor - 1) < 0.01);
  CHECK_THAT(factor, WithinRel(sech2(2.0, 7.1e-4, 0.6), 1e-12));
  CHECK_THROWS_AS(gamma_sd_of_bt(1.0, 0.0, 7.1e-4, 1.0), InvalidParameter);

  oracle::Rng rng(43);
  for (int k = 0; k < 100; ++k) {
    const double b = rng.uniform(-20.0, 20.0), t = rng.uniform(0.05, 5.0), g = rng.uniform(1e-4, 2.0);
    const double v = gamma_sd_of_bt(b, t, g, 7e3);
    CHECK(v > 0.0);
    CHECK(v <= 7e3);
    CHECK(v == gamma_sd_of_bt(-b, t, g, 7e3));
  }
}

TEST_CASE("broadening maximum is linear in field") {
  DiffusionModel m;
  m.gamma_max0 = 5e3;
  m.b_noise = 87e-6;
  const double k = 3.45e8;
  CHECK(gamma_max_of_b(0.0, m, k) == 5e3);
  CHECK_THAT(gamma_max_of_b(2.0, m, k) - 5e3, WithinRel(2 * (gamma_max_of_b(1.0, m, k) - 5e3), 1e-14));
  CHECK_THAT(gamma_max_of_b(1.0, m, k) - 5e3, WithinRel(k * 87e-6, 1e-14));
}

TEST_CASE("diffusion fit recovers noise-free parameters exactly") {
  const DiffusionModel m{10e3, 40e3, 0.05};
  const auto fit = fit_diffusion_timeseries(width_series(m, log_delays(1, 300, 20)));
  CHECK_THAT(fit.gamma_0, WithinRel(10e3, 1e-6));
  CHECK_THAT(fit.gamma_sd, WithinRel(40e3, 1e-6));
  CHECK_THAT(fit.rate_rs, WithinRel(0.05, 1e-6));
}

TEST_CASE("diffusion fit recovers parameters from noisy series") {
  const DiffusionModel m{10e3, 40e3, 0.05};
  int good = 0;
  for (int seed = 0; seed < 40; ++seed) {
    oracle::Rng rng(500 + seed);
    const auto fit = fit_diffusion_timeseries(width_series(m, log_delays(1, 300, 20), &rng, 0.02 * 10e3));
    good += std::abs(fit.gamma_0 / 10e3 - 1) < 0.05 && std::abs(fit.gamma_sd / 40e3 - 1) < 0.05 &&
            std::abs(fit.rate_rs / 0.05 - 1) < 0.05;
    CHECK(fit.sigma_rate_rs() > 0.0);
  }
  CHECK(good >= 36);
}

TEST_CASE("weighted diffusion fit reports an absolute covariance") {
  const DiffusionModel m{10e3, 40e3, 0.05};
  auto series = width_series(m, log_delays(1, 300, 20));
  for (auto& p : series) p.sigma = 200.0;
  const auto fit = fit_diffusion_timeseries(series);
  CHECK(fit.chi2 < 1e-12);
  CHECK(fit.covariance.allFinite());
  CHECK(fit.sigma_gamma_0() > 0.0);
  CHECK_THAT(fit.covariance(0, 1), WithinAbs(fit.covariance(1, 0), 1e-9 * fit.covariance.norm()));
  // Doubling every sigma doubles the parameter errors.
  for (auto& p : series) p.sigma = 400.0;
  CHECK_THAT(fit_diffusion_timeseries(series).sigma_gamma_sd(), WithinRel(2 * fit.sigma_gamma_sd(), 1e-6));
}

TEST_CASE("diffusion fit refuses unidentifiable or short series") {
  const DiffusionModel m{10e3, 40e3, 0.05};
  CHECK_THROWS_AS(fit_diffusion_timeseries(width_series(m, log_delays(0.01, 0.5, 20))), DegenerateFit);
  CHECK_THROWS_AS(fit_diffusion_timeseries(width_series(m, log_delays(1, 300, 4))), InsufficientData);
  CHECK_THROWS_AS(fit_diffusion_timeseries(width_series(m, log_delays(10, 50, 20))), InsufficientData);
  CHECK_THROWS_AS(fit_diffusion_timeseries({}), InsufficientData);
}

TEST_CASE("noise field is recovered from a noise-free sweep") {
  const double k = 3.45e8, gm0 = 5e3, bn = 87e-6, g_env = 7.1e-4, temp = 0.6;
  std::vector<FieldPoint> pts;
  for (int i = 0; i < 20; ++i) {
    const double b = 0.1 + 1.9 * i / 19.0;
    pts.push_back({b, (k * b * bn + gm0) * sech2(b, g_env, temp), {}});
  }
  const auto fit = fit_bnoise(pts, k, SechFactor{g_env, temp});
  REQUIRE(fit.b_noise);
  CHECK_THAT(*fit.b_noise, WithinRel(bn, 1e-9));
  CHECK_THAT(fit.gamma_max0, WithinRel(gm0, 1e-9));
  CHECK(fit.warnings.empty());

  // Ignoring a sub-percent thermal factor still lands within 1%.
  const auto plain = fit_bnoise(pts, k);
  CHECK_THAT(*plain.b_noise, WithinRel(bn, 0.01));
}

TEST_CASE("flat broadening gives zero noise field") {
  std::vector<FieldPoint> pts{{0.1, 4e3, {}}, {0.5, 4e3, {}}, {1.0, 4e3, {}}, {2.0, 4e3, {}}};
  const auto fit = fit_bnoise(pts, 3.45e8);
  REQUIRE(fit.b_noise);
  CHECK(*fit.b_noise == 0.0);
  CHECK_THAT(fit.gamma_max0, WithinRel(4e3, 1e-12));
}

TEST_CASE("falling broadening is flagged instead of fitted") {
  std::vector<FieldPoint> pts{{0.1, 9e3, {}}, {0.5, 8e3, {}}, {1.0, 6e3, {}}, {2.0, 3e3, {}}};
  const auto fit = fit_bnoise(pts, 3.45e8);
  CHECK_FALSE(fit.b_noise);
  CHECK(fit.slope < 0.0);
  REQUIRE(fit.warnings.size() == 1);
  CHECK(fit.warnings[0].find("NegativeSlope") != std::string::npos);
}

TEST_CASE("noise field from five noisy fields") {
  const double k = 3.45e8, gm0 = 5e3, bn = 87e-6;
  int good = 0;
  for (int seed = 0; seed < 100; ++seed) {
    oracle::Rng rng(7000 + seed);
    std::vector<FieldPoint> pts;
    for (int i = 0; i < 5; ++i) {
      const double b = 0.1 + 1.9 * i / 4.0;
      const double truth = k * b * bn + gm0;
      pts.push_back({b, truth * (1 + 0.1 * rng.normal()), 0.1 * truth});
    }
    const auto fit = fit_bnoise(pts, k);
    good += fit.b_noise && std::abs(*fit.b_noise / bn - 1) < 0.2;
  }
  // Five points at 10% leave a few percent of draws outside 20%.
  CHECK(good >= 90);
}

TEST_CASE("splitting comparison") {
  const DiffusionModel m{10e3, 40e3, 0.05};
  const auto a = width_series(m, log_delays(1, 300, 10));
  const auto eq = equivalent_splitting_check(a, a);
  CHECK(eq.comparable);
  for (double r : eq.ratios) CHECK(r == 1.0);
  CHECK(eq.max_deviation == 0.0);

  auto doubled = a;
  for (auto& p : doubled) p.fwhm *= 2;
  CHECK_FALSE(equivalent_splitting_check(a, doubled).comparable);

  auto shifted = a;
  shifted[3].t_delay *= 1.5;
  CHECK_THROWS_AS(equivalent_splitting_check(a, shifted), MismatchedSampling);
  CHECK_THROWS_AS(equivalent_splitting_check(a, std::vector<WidthPoint>(a.begin(), a.end() - 1)),
                  MismatchedSampling);
}

TEST_CASE("site classes with matched effective splitting broaden alike") {
  const auto spin = fixture::tm_like_spin_model();
  const auto classes = default_site_classes();
  const Eigen::Vector3d u = fixture::along_111();
  // Per-class sensitivity of the optical line to a field fluctuation.
  const double k0 = std::abs(tensor_transition_shift(u, classes[0], spin));
  const double k1 = std::abs(tensor_transition_shift(u, classes[1], spin));
  const double b0 = 1.0, b1 = b0 * k0 / k1;

  auto series_for = [&](double k_class, double b) {
    DiffusionModel m{10e3, 0.0, 0.05};
    m.b_noise = 87e-6;
    m.gamma_max0 = 2e3;
    m.gamma_sd = gamma_sd_of_bt(b, 0.6, 7.1e-4, gamma_max_of_b(b, m, k_class));
    return width_series(m, log_delays(1, 300, 12));
  };
  CHECK(equivalent_splitting_check(series_for(k0, b0), series_for(k1, b1)).comparable);
  CHECK_FALSE(equivalent_splitting_check(series_for(k0, 0.2), series_for(k1, 2.0)).comparable);
}
