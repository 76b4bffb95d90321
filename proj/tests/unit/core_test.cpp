#include <catch_amalgamated.hpp>

#include "shb/core.hpp"

using namespace shb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FrequencyGrid grid_1khz() { return FrequencyGrid{150e6, 200e3, 201}; }

MaterialParams material_on(const FrequencyGrid& g, double zeta = 0.5) {
  MaterialParams m;
  m.branching_ratio = zeta;
  m.background_od = SpectralArray::constant(g, 1.0, Quantity::OpticalDepth);
  return m;
}

LaserParams laser() { return LaserParams{5e3, 1e3, 150e6}; }

} // namespace

TEST_CASE("grid bins are symmetric about the center and uniformly spaced") {
  const FrequencyGrid g{10.0, 8.0, 5};
  CHECK(g.spacing() == 2.0);
  CHECK(g.detuning(0) == 6.0);
  CHECK(g.detuning(2) == 10.0);
  CHECK(g.detuning(4) == 14.0);
  CHECK(g.offset(0) == -g.offset(4));
  CHECK(g.nearest_bin(10.9) == 2);
  CHECK(g.nearest_bin(-100.0) == 0);
  CHECK(g.nearest_bin(100.0) == 4);

  const FrequencyGrid even{0.0, 3.0, 4};
  CHECK(even.offset(0) == -1.5);
  CHECK(even.offset(3) == 1.5);
}

TEST_CASE("grid invariants") {
  CHECK(FrequencyGrid{0, 1, 2}.violations().size() == 1);
  CHECK(FrequencyGrid{0, 0, 10}.violations().front().field == "grid.span");
  CHECK(FrequencyGrid{0, 1, 3}.violations().empty());
}

TEST_CASE("spectral array tags constrain values") {
  const auto g = grid_1khz();
  auto pop = SpectralArray::constant(g, 0.5, Quantity::Population);
  CHECK(pop.violations("n").empty());
  pop[3] = 1.1;
  CHECK(pop.violations("n").size() == 1);

  auto rate = SpectralArray::zeros(g, Quantity::Rate);
  rate[0] = -1.0;
  CHECK_FALSE(rate.violations("R").empty());

  auto od = SpectralArray::constant(g, 2.0, Quantity::OpticalDepth);
  CHECK(od.violations("d0").empty());
  od.values.pop_back();
  CHECK_FALSE(od.violations("d0").empty());
}

TEST_CASE("validate accepts the reference parameter set") {
  const auto g = grid_1khz();
  const auto cfg = validate(material_on(g), laser(), g);
  CHECK(cfg.grid == g);
  CHECK(cfg.material.excited_lifetime == 1e-3);
  CHECK(cfg.material.bottleneck_lifetime == 50e-3);
}

TEST_CASE("validate rejects a branching ratio outside [0, 1]") {
  const auto g = grid_1khz();
  try {
    validate(material_on(g, 1.3), laser(), g);
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(e.names("material.zeta"));
    CHECK(e.category() == ErrorCategory::Validation);
  }
}

TEST_CASE("validate requires a branching ratio") {
  const auto g = grid_1khz();
  MaterialParams m = material_on(g);
  m.branching_ratio = std::numeric_limits<double>::quiet_NaN();
  try {
    validate(m, laser(), g);
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(e.names("material.zeta"));
    CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("required"));
  }
}

TEST_CASE("validate rejects a grid coarser than a quarter linewidth") {
  const FrequencyGrid g{150e6, 1e6, 101};  // 10 kHz spacing
  try {
    validate(material_on(g), laser(), g);
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(e.names("grid.spacing"));
    CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("grid resolution"));
  }
}

TEST_CASE("validate reports every violation at once") {
  const auto g = grid_1khz();
  MaterialParams m = material_on(g, -0.1);
  m.excited_lifetime = 0.0;
  m.homogeneous_linewidth = -5;
  LaserParams l = laser();
  l.linewidth = 0.0;
  try {
    validate(m, l, g);
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(e.names("material.zeta"));
    CHECK(e.names("material.excited_lifetime"));
    CHECK(e.names("material.homogeneous_linewidth"));
    CHECK(e.names("laser.linewidth"));
  }
}

TEST_CASE("background must live on the simulation grid") {
  const auto g = grid_1khz();
  auto m = material_on(FrequencyGrid{150e6, 200e3, 401});
  CHECK_THROWS_AS(validate(m, laser(), g), InvalidParameter);
}

TEST_CASE("require_same_grid signals a mismatch") {
  CHECK_NOTHROW(require_same_grid(grid_1khz(), grid_1khz(), "x"));
  CHECK_THROWS_AS(require_same_grid(grid_1khz(), FrequencyGrid{0, 200e3, 201}, "x"), GridMismatch);
}

TEST_CASE("population state conservation") {
  const auto g = grid_1khz();
  auto s = PopulationState::all_ground(g);
  CHECK(s.violations().empty());
  CHECK(s.conservation_error() == 0.0);
  s.ground[5] = 0.7;
  s.excited[5] = 0.2;
  s.bottleneck[5] = 0.1;
  CHECK_THAT(s.conservation_error(), WithinAbs(0.0, 1e-15));
  s.bottleneck[7] = 0.01;
  CHECK_THAT(s.conservation_error(), WithinRel(0.01, 1e-12));
  CHECK_FALSE(s.violations().empty());
}
