#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "npupg/carbon.hpp"

using namespace npupg;

namespace {

CarbonParams base_params() {
  CarbonParams cp;
  cp.intensity_kg_per_kwh = 0.0624;
  cp.embodied_per_chip_kg = 100.0;
  cp.horizon_years = 10;
  cp.yearly_efficiency_ratio = 0.9;
  cp.chips = 1;
  return cp;
}

// Second implementation of the sweep objective, written as a plain sum so the
// production argmin can be checked against a fresh enumeration.
uint32_t brute_force_optimal(const CarbonParams& cp, double base_j, double saving) {
  uint32_t best_l = 0;
  double best = 0;
  for (uint32_t L = 1; L <= cp.horizon_years; L++) {
    double op = 0;
    for (uint32_t y = 0; y < cp.horizon_years; y++) {
      double scale = std::pow(cp.yearly_efficiency_ratio, double((y / L) * L));
      op += base_j * (1.0 - saving) * scale / 3.6e6 * cp.intensity_kg_per_kwh;
    }
    double total = op + std::ceil(double(cp.horizon_years) / L) *
                            cp.embodied_per_chip_kg * cp.chips;
    if (best_l == 0 || total <= best) {
      best = total;
      best_l = L;
    }
  }
  return best_l;
}

}  // namespace

TEST_CASE("operational carbon is linear with the configured intensity") {
  CarbonParams cp = base_params();
  CHECK(operational_carbon_kg(0.0, cp) == 0.0);
  // 1000 kWh on a 0.0624 kg/kWh grid.
  CHECK(operational_carbon_kg(3.6e9, cp) == doctest::Approx(62.4).epsilon(1e-12));
  double e = 7.83e11;
  CHECK(operational_carbon_kg(e / 2, cp) ==
        doctest::Approx(operational_carbon_kg(e, cp) / 2).epsilon(1e-12));
}

TEST_CASE("parameter validation names each violated bound") {
  CarbonParams cp = base_params();
  cp.intensity_kg_per_kwh = 0;
  CHECK_THROWS_AS(validate(cp), ConfigError);
  cp = base_params();
  cp.yearly_efficiency_ratio = 0;
  CHECK_THROWS_AS(validate(cp), ConfigError);
  cp.yearly_efficiency_ratio = 1.2;
  CHECK_THROWS_AS(validate(cp), ConfigError);
  cp = base_params();
  cp.horizon_years = 0;
  CHECK_THROWS_AS(validate(cp), ConfigError);
  cp = base_params();
  cp.chips = 0;
  CHECK_THROWS_AS(validate(cp), ConfigError);
  cp = base_params();
  cp.embodied_per_chip_kg = -1;
  CHECK_THROWS_AS(validate(cp), ConfigError);
}

TEST_CASE("three-year sweep matches the hand-computed table") {
  CarbonParams cp;
  cp.intensity_kg_per_kwh = 0.0624;
  cp.embodied_per_chip_kg = 100.0;
  cp.horizon_years = 3;
  cp.yearly_efficiency_ratio = 0.8;
  cp.chips = 2;
  LifespanSweep s = lifespan_sweep(cp, 3.6e9, 0.0);
  REQUIRE(s.points.size() == 3);
  CHECK(s.points[0].operational_kg == doctest::Approx(62.4 * 2.44).epsilon(1e-12));
  CHECK(s.points[0].embodied_kg == doctest::Approx(600.0));
  CHECK(s.points[1].operational_kg == doctest::Approx(62.4 * 2.64).epsilon(1e-12));
  CHECK(s.points[1].embodied_kg == doctest::Approx(400.0));
  CHECK(s.points[2].operational_kg == doctest::Approx(62.4 * 3.0).epsilon(1e-12));
  CHECK(s.points[2].embodied_kg == doctest::Approx(200.0));
  CHECK(s.optimal_years == 3);
  for (const LifespanPoint& pt : s.points) {
    CHECK(pt.total_kg == doctest::Approx(pt.operational_kg + pt.embodied_kg));
    CHECK(pt.is_optimal == (pt.lifespan_years == 3));
    CHECK(pt.total_kg >= s.points[2].total_kg - 1e-12);
  }
}

TEST_CASE("degenerate parameter corners pick the forced lifespan") {
  CarbonParams cp = base_params();
  cp.embodied_per_chip_kg = 0;  // upgrades are free, efficiency compounds
  CHECK(lifespan_sweep(cp, 1e12, 0.0).optimal_years == 1);

  cp = base_params();
  cp.yearly_efficiency_ratio = 1.0;  // upgrades buy nothing
  CHECK(lifespan_sweep(cp, 1e12, 0.0).optimal_years == cp.horizon_years);

  cp = base_params();
  cp.yearly_efficiency_ratio = 1.0;
  cp.embodied_per_chip_kg = 0;  // every lifespan identical: tie goes longer
  CHECK(lifespan_sweep(cp, 1e12, 0.0).optimal_years == cp.horizon_years);
}

TEST_CASE("argmin agrees with fresh enumeration over random parameter sets") {
  SplitMix64 rng(0x5eed);
  for (int i = 0; i < 200; i++) {
    CarbonParams cp;
    cp.intensity_kg_per_kwh = 0.01 + rng.unit();
    cp.embodied_per_chip_kg = rng.unit() * 2000.0;
    cp.horizon_years = 1 + uint32_t(rng.below(15));
    cp.yearly_efficiency_ratio = 0.5 + 0.5 * rng.unit();
    cp.chips = 1 + uint32_t(rng.below(64));
    double base_j = 1e9 + rng.unit() * 1e13;
    double saving = rng.unit() * 0.4;
    CAPTURE(i);
    LifespanSweep s = lifespan_sweep(cp, base_j, saving);
    CHECK(s.optimal_years == brute_force_optimal(cp, base_j, saving));
    for (const LifespanPoint& pt : s.points)
      CHECK(pt.total_kg >= s.points[s.optimal_years - 1].total_kg - 1e-9);
  }
}

TEST_CASE("energy savings never shorten the optimal lifespan") {
  SplitMix64 rng(0xca4b07);
  for (int i = 0; i < 200; i++) {
    CarbonParams cp;
    cp.intensity_kg_per_kwh = 0.0624;
    cp.embodied_per_chip_kg = rng.unit() * 1500.0;
    cp.horizon_years = 2 + uint32_t(rng.below(12));
    cp.yearly_efficiency_ratio = 0.6 + 0.4 * rng.unit();
    cp.chips = 1 + uint32_t(rng.below(16));
    double base_j = 1e10 + rng.unit() * 1e13;
    double saving = 0.05 + rng.unit() * 0.35;
    CAPTURE(i);
    uint32_t plain = lifespan_sweep(cp, base_j, 0.0).optimal_years;
    uint32_t gated = lifespan_sweep(cp, base_j, saving).optimal_years;
    CHECK(gated >= plain);
  }
}

TEST_CASE("optimal lifespan moves monotonically with embodied cost and energy") {
  CarbonParams cp = base_params();
  double base_j = 5e12;
  uint32_t prev = 1;
  for (double emb : {0.0, 50.0, 200.0, 800.0, 3200.0, 12800.0}) {
    cp.embodied_per_chip_kg = emb;
    uint32_t opt = lifespan_sweep(cp, base_j, 0.0).optimal_years;
    CHECK(opt >= prev);
    prev = opt;
  }
  cp = base_params();
  cp.embodied_per_chip_kg = 400.0;
  prev = cp.horizon_years;
  for (double e : {1e10, 1e11, 1e12, 1e13, 1e14}) {
    uint32_t opt = lifespan_sweep(cp, e, 0.0).optimal_years;
    CHECK(opt <= prev);
    prev = opt;
  }
}

TEST_CASE("lifespan csv lists one row per year and flags the optimum") {
  CarbonParams cp = base_params();
  cp.horizon_years = 4;
  LifespanSweep s = lifespan_sweep(cp, 1e12, 0.1);
  std::istringstream in(lifespan_csv(s));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "lifespan_years,operational_kg,embodied_kg,total_kg,is_optimal");
  int rows = 0, optimal_rows = 0;
  while (std::getline(in, line)) {
    rows++;
    CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
    if (line.size() >= 2 && line.substr(line.size() - 2) == ",1") optimal_rows++;
  }
  CHECK(rows == 4);
  CHECK(optimal_rows == 1);
}
