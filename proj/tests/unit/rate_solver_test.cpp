#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "shb/lorentzian.hpp"
#include "shb/rate_solver.hpp"

using namespace shb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MaterialParams material(const FrequencyGrid& g, double zeta = 0.5, double t_e = 1e-3, double t_b = 50e-3) {
  MaterialParams m;
  m.excited_lifetime = t_e;
  m.bottleneck_lifetime = t_b;
  m.branching_ratio = zeta;
  m.background_od = SpectralArray::constant(g, 1.0, Quantity::OpticalDepth);
  return m;
}

FrequencyGrid small_grid() { return FrequencyGrid{150e6, 200e3, 201}; }

PopulationState single(const FrequencyGrid& g, double ng, double ne, double nb) {
  auto s = PopulationState::all_ground(g);
  for (std::size_t i = 0; i < g.bin_count; ++i) {
    s.ground[i] = ng;
    s.excited[i] = ne;
    s.bottleneck[i] = nb;
  }
  return s;
}

BurnSequence burn_wait(double a, double wait, std::size_t cycles = 50) {
  const LaserParams laser{5e3, a, 150e6};
  return BurnSequence::repeated({PulseSegment::burn(1e-3, laser), PulseSegment::wait(wait)}, cycles);
}

std::vector<double> central_depths(const HoleEvolution& evo, const MaterialParams& m) {
  std::vector<double> d;
  for (const auto& od : evo.od_spectra) d.push_back(hole_depth(od, m.background_od, 150e6));
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("generator columns sum to zero") {
  const auto g = small_grid();
  oracle::Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto m = material(g, rng.uniform(), rng.log_uniform(1e-4, 1e-2), rng.log_uniform(1e-3, 1.0));
    const auto gen = rate_generator(rng.log_uniform(1.0, 1e5), m);
    for (int c = 0; c < 3; ++c) CHECK_THAT(gen[0][c] + gen[1][c] + gen[2][c], WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("ground state is stationary without pumping") {
  const auto g = small_grid();
  const auto m = material(g);
  for (double dt : {1e-6, 1e-3, 1.0, 1e3}) {
    const auto s = propagate_segment(PopulationState::all_ground(g), std::nullopt, m, dt);
    for (std::size_t i = 0; i < g.bin_count; ++i) {
      CHECK(s.ground[i] == 1.0);
      CHECK(s.excited[i] == 0.0);
      CHECK(s.bottleneck[i] == 0.0);
    }
  }
}

TEST_CASE("excited population fully relaxes after a long wait") {
  const auto g = small_grid();
  const auto s = propagate_segment(single(g, 0, 1, 0), std::nullopt, material(g), 100.0);
  CHECK_THAT(s.ground[0], WithinAbs(1.0, 1e-12));
  CHECK_THAT(s.excited[0], WithinAbs(0.0, 1e-12));
  CHECK_THAT(s.bottleneck[0], WithinAbs(0.0, 1e-12));
}

TEST_CASE("relaxation through the bottleneck follows the two-exponential cascade") {
  const auto g = small_grid();
  const double t_e = 1e-3, t_b = 50e-3;
  const auto m = material(g, 1.0, t_e, t_b);
  const auto s = propagate_segment(single(g, 0, 1, 0), std::nullopt, m, t_e);
  const double nb = t_b / (t_b - t_e) * (std::exp(-t_e / t_b) - std::exp(-1.0));
  CHECK_THAT(s.excited[0], WithinRel(std::exp(-1.0), 1e-12));
  CHECK_THAT(s.bottleneck[0], WithinRel(nb, 1e-12));

  const auto ref = oracle::rk4_adaptive({0.0, t_e, t_b, 1.0}, {0, 1, 0}, t_e);
  CHECK_THAT(s.excited[0], WithinAbs(ref[1], 1e-10));
  CHECK_THAT(s.bottleneck[0], WithinAbs(ref[2], 1e-10));
}

TEST_CASE("segment propagation matches adaptive RK4 for random parameters") {
  const FrequencyGrid g{0.0, 4.0, 5};
  oracle::Rng rng(2024);
  for (int draw = 0; draw < 100; ++draw) {
    const double r = rng.log_uniform(1.0, 1e4);
    const double zeta = rng.uniform();
    const double t_e = rng.log_uniform(1e-4, 1e-2);
    const double t_b = rng.log_uniform(1e-3, 1.0);
    const double dt = rng.log_uniform(1e-5, 1e-1);
    const double ng = rng.uniform(), ne = rng.uniform(0.0, 1.0 - ng);
    const oracle::State n0{ng, ne, 1.0 - ng - ne};

    const auto m = material(g, zeta, t_e, t_b);
    const auto rate = SpectralArray::constant(g, r, Quantity::Rate);
    const auto out = propagate_segment(single(g, n0[0], n0[1], n0[2]), rate, m, dt);
    const auto ref = oracle::rk4_adaptive({r, t_e, t_b, zeta}, n0, dt);
    CHECK_THAT(out.ground[2], WithinAbs(ref[0], 1e-8));
    CHECK_THAT(out.excited[2], WithinAbs(ref[1], 1e-8));
    CHECK_THAT(out.bottleneck[2], WithinAbs(ref[2], 1e-8));

    const auto wait = propagate_segment(single(g, n0[0], n0[1], n0[2]), std::nullopt, m, dt);
    const auto ref_wait = oracle::rk4_adaptive({0.0, t_e, t_b, zeta}, n0, dt);
    CHECK_THAT(wait.ground[2], WithinAbs(ref_wait[0], 1e-8));
    CHECK_THAT(wait.bottleneck[2], WithinAbs(ref_wait[2], 1e-8));
  }
}

TEST_CASE("two-level steady state under a long CW burn") {
  // Bins far out in the wings relax at barely 1/T_e, so keep the grid near the line.
  const FrequencyGrid g{150e6, 30e3, 31};
  const double t_e = 1e-3;
  const auto m = material(g, 0.0, t_e);
  const LaserParams laser{5e3, 2.5e3, 150e6};
  BurnSequence seq{{PulseSegment::burn(10 * t_e, laser)}, SnapshotPolicy::FinalOnly};
  const auto evo = run_sequence(seq, m, g);
  REQUIRE(evo.size() == 1);
  const auto rate = excitation_rate(laser, m, std::nullopt, g);
  for (std::size_t i = 0; i < g.bin_count; ++i) {
    const double r = rate[i];
    CHECK_THAT(evo.states.back().excited[i], WithinRel(r / (2 * r + 1 / t_e), 1e-6));
  }
}

TEST_CASE("repeated burns deepen the hole towards saturation") {
  const auto g = small_grid();
  const auto m = material(g);
  const auto evo = run_sequence(burn_wait(1e3, 10e-3), m, g);
  REQUIRE(evo.size() == 51);
  CHECK(evo.times.front() == 0.0);
  CHECK_THAT(evo.times.back(), WithinRel(50 * 11e-3, 1e-12));
  const auto d = central_depths(evo, m);
  for (std::size_t k = 1; k < d.size(); ++k) CHECK(d[k] > d[k - 1]);
  CHECK(d.back() - d[d.size() - 2] < 0.2 * (d[1] - d[0]));
  for (const auto& s : evo.states) CHECK(s.conservation_error() < conservation_tolerance);
  CHECK(evo.distinct_rates == 1);
}

TEST_CASE("long waits let the hole recover between burns") {
  const auto g = small_grid();
  const auto m = material(g);
  const auto short_wait = central_depths(run_sequence(burn_wait(1e3, 10e-3), m, g), m);
  const auto long_wait = central_depths(run_sequence(burn_wait(1e3, 100e-3), m, g), m);
  CHECK(long_wait.back() < 0.7 * short_wait.back());
  CHECK(long_wait.back() - long_wait[long_wait.size() - 2] < 1e-3 * long_wait.back());
}

TEST_CASE("zero-amplitude burns leave the background untouched") {
  const auto g = small_grid();
  const auto m = material(g);
  const auto evo = run_sequence(burn_wait(0.0, 10e-3, 5), m, g);
  for (const auto& od : evo.od_spectra)
    for (std::size_t i = 0; i < g.bin_count; ++i) CHECK(od[i] == m.background_od[i]);
}

TEST_CASE("snapshot policies") {
  const auto g = small_grid();
  const auto m = material(g);
  auto seq = burn_wait(1e3, 10e-3, 4);
  seq.snapshot_policy = SnapshotPolicy::AfterEachSegment;
  CHECK(run_sequence(seq, m, g).size() == 9);
  seq.segments[1].substeps = 5;
  CHECK(run_sequence(seq, m, g).size() == 13);
  seq.snapshot_policy = SnapshotPolicy::FinalOnly;
  const auto fin = run_sequence(seq, m, g);
  REQUIRE(fin.size() == 1);
  CHECK_THAT(fin.times[0], WithinRel(4 * 11e-3, 1e-12));
  seq.snapshot_policy = SnapshotPolicy::AfterEachCycle;
  CHECK(run_sequence(seq, m, g).size() == 5);
}

TEST_CASE("substeps do not change the final state") {
  const auto g = small_grid();
  const auto m = material(g);
  auto seq = burn_wait(1e3, 10e-3, 3);
  const auto plain = run_sequence(seq, m, g);
  for (auto& s : seq.segments) s.substeps = 7;
  const auto split = run_sequence(seq, m, g);
  for (std::size_t i = 0; i < g.bin_count; ++i)
    CHECK_THAT(split.states.back().ground[i], WithinAbs(plain.states.back().ground[i], 1e-12));
}

TEST_CASE("results do not depend on the worker count") {
  const auto g = small_grid();
  const auto m = material(g);
  RunOptions one{1, std::nullopt}, many{5, std::nullopt};
  const auto a = run_sequence(burn_wait(1e3, 10e-3, 10), m, g, std::nullopt, one);
  const auto b = run_sequence(burn_wait(1e3, 10e-3, 10), m, g, std::nullopt, many);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.states[k].ground.values == b.states[k].ground.values);
}

TEST_CASE("invalid sequences are rejected") {
  const auto g = small_grid();
  const auto m = material(g);
  CHECK_THROWS_AS(run_sequence(BurnSequence{}, m, g), InvalidParameter);
  CHECK_THROWS_AS(run_sequence(BurnSequence{{PulseSegment::wait(-1.0)}}, m, g), InvalidParameter);
  const LaserParams coarse{1e3, 1e3, 150e6};  // grid spacing exceeds a quarter linewidth
  CHECK_THROWS_AS(run_sequence(BurnSequence{{PulseSegment::burn(1e-3, coarse)}}, m, g), InvalidParameter);
}

TEST_CASE("propagation rejects a rate on another grid") {
  const auto g = small_grid();
  const auto rate = SpectralArray::constant(FrequencyGrid{150e6, 200e3, 101}, 1.0, Quantity::Rate);
  CHECK_THROWS_AS(propagate_segment(PopulationState::all_ground(g), rate, material(g), 1e-3), GridMismatch);
}

TEST_CASE("optical depth is background times ground population") {
  const auto g = small_grid();
  auto m = material(g);
  auto s = PopulationState::all_ground(g);
  CHECK(to_optical_depth(s, m).values == m.background_od.values);
  s.ground[100] = 0.0;
  s.excited[100] = 1.0;
  s.ground[50] = 0.5;
  s.bottleneck[50] = 0.5;
  const auto od = to_optical_depth(s, m);
  CHECK(od[100] == 0.0);
  CHECK(od[50] == 0.5);
  CHECK(od.quantity == Quantity::OpticalDepth);
}

TEST_CASE("diffusion broadening adds Lorentzian widths and keeps the hole area") {
  const FrequencyGrid g{0.0, 2e6, 4001};  // 500 Hz bins
  const auto bg = SpectralArray::constant(g, 1.0, Quantity::OpticalDepth);
  auto od = bg;
  const double w = 20e3;
  for (std::size_t i = 0; i < g.bin_count; ++i) {
    const double x = g.offset(i) / (w / 2);
    od[i] = 1.0 - 0.5 / (1 + x * x);
  }
  auto feature = [&](const SpectralArray& s) {
    SpectralArray f{g, std::vector<double>(g.bin_count), Quantity::Rate};
    for (std::size_t i = 0; i < g.bin_count; ++i) f[i] = bg[i] - s[i];
    return f;
  };
  auto area = [&](const SpectralArray& s) {
    double a = 0.0;
    for (std::size_t i = 0; i < g.bin_count; ++i) a += bg[i] - s[i];
    return a;
  };

  CHECK(apply_diffusion_broadening(od, bg, 0.0).values == od.values);
  for (double f : {5e3, 10e3, 40e3}) {
    const auto out = apply_diffusion_broadening(od, bg, f);
    CHECK_THAT(half_max_width(feature(out)), WithinAbs(w + f, 2 * g.spacing()));
    CHECK_THAT(area(out), WithinRel(area(od), 1e-6));
  }
  CHECK_THROWS_AS(apply_diffusion_broadening(od, bg, 0.5 * g.spacing()), GridUnresolvable);
}

TEST_CASE("evolution CSV output is byte-identical across runs") {
  const auto g = small_grid();
  const auto m = material(g);
  const auto root = std::filesystem::temp_directory_path() / "shb_rate_solver_test";
  std::filesystem::remove_all(root);
  write_evolution_csv(run_sequence(burn_wait(1e3, 10e-3, 3), m, g), root / "a");
  write_evolution_csv(run_sequence(burn_wait(1e3, 10e-3, 3), m, g), root / "b");
  CHECK(std::filesystem::exists(root / "a" / "index.csv"));
  CHECK(std::filesystem::exists(root / "a" / "snapshot_0003.csv"));
  CHECK_FALSE(std::filesystem::exists(root / "a" / "snapshot_0004.csv"));
  for (const auto& e : std::filesystem::directory_iterator(root / "a"))
    CHECK(slurp(e.path()) == slurp(root / "b" / e.path().filename()));
  CHECK(slurp(root / "a" / "snapshot_0000.csv").rfind("detuning_hz,od,n_g,n_e,n_b\n", 0) == 0);
  std::filesystem::remove_all(root);
}
