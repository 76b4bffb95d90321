#include <catch_amalgamated.hpp>

#include "shb/dipolar.hpp"

using namespace shb;
using Catch::Matchers::WithinRel;

namespace {

// mu0 / 4pi * mu_B in T m^3, written out independently of the library constants.
constexpr double dipole_scale = 1e-7 * 9.2740100783e-24;

SpinSpecies species(std::string name, double g, double r_angstrom, double c = 0.5) {
  return SpinSpecies{std::move(name), c, g, r_angstrom * 1e-10};
}

} // namespace

TEST_CASE("point-dipole field") {
  const auto ga71 = species("Ga71", 0.00071, 2.6);
  CHECK_THAT(dipolar_field(ga71), WithinRel(dipole_scale * 0.00071 / std::pow(2.6e-10, 3), 1e-9));
  CHECK(dipolar_field(species("x", 0.0, 3.0)) == 0.0);
  CHECK_THAT(dipolar_field(ga71, 0.5), WithinRel(0.5 * dipolar_field(ga71), 1e-15));
}

TEST_CASE("host nuclei land within a factor of five of the tabulated fields") {
  const double ga71 = dipolar_field(species("Ga71", 0.00071, 2.6));
  const double y89 = dipolar_field(species("Y89", 0.00014, 4.0));
  CHECK(ga71 > 15e-6 / 5);
  CHECK(ga71 < 15e-6 * 5);
  CHECK(y89 > 850e-9 / 5);
  CHECK(y89 < 850e-9 * 5);
}

TEST_CASE("field scales as inverse cube of distance and linearly in g") {
  for (double r : {1.0, 2.6, 4.0, 17.0}) {
    const auto s = species("s", 0.003, r);
    CHECK_THAT(dipolar_field(species("s", 0.003, 2 * r)), WithinRel(dipolar_field(s) / 8, 1e-14));
    CHECK_THAT(dipolar_field(species("s", 0.009, r)), WithinRel(3 * dipolar_field(s), 1e-14));
  }
}

TEST_CASE("species table ranks by field") {
  const auto table = species_table(garnet_host_species());
  REQUIRE(table.size() == 4);
  CHECK(table[0].species.name == "Ga69");
  CHECK(table[1].species.name == "Ga71");
  CHECK(table[2].species.name == "Y89");
  CHECK(table[3].species.name == "Tm169");
  CHECK(table[0].dominant);
  for (std::size_t i = 1; i < table.size(); ++i) {
    CHECK_FALSE(table[i].dominant);
    CHECK(table[i].field <= table[i - 1].field);
  }
}

TEST_CASE("single and tied species") {
  const auto one = species_table({species("only", 0.001, 3.0)});
  REQUIRE(one.size() == 1);
  CHECK(one[0].dominant);

  const auto tie = species_table({species("first", 0.001, 3.0), species("second", 0.001, 3.0)});
  CHECK(tie[0].species.name == "first");
  CHECK(tie[0].dominant);
  CHECK_FALSE(tie[1].dominant);
}

TEST_CASE("species table rejects bad input") {
  CHECK_THROWS_AS(species_table({}), InvalidParameter);
  CHECK_THROWS_AS(species_table({species("bad", 0.001, 0.0)}), InvalidParameter);
  CHECK_THROWS_AS(species_table({species("bad", 0.001, 3.0, 1.5)}), InvalidParameter);
}
