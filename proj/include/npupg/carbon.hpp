#pragma once
// Carbon accounting: operational emissions from fleet energy, embodied
// amortization across hardware replacements, and the replacement-lifespan
// sweep used to find the carbon-optimal upgrade cadence.

#include <cstdint>
#include <string>
#include <vector>

#include "npupg/util.hpp"

namespace npupg {

struct CarbonParams {
  double intensity_kg_per_kwh = 0.0624;  // grid carbon per kWh consumed
  double embodied_per_chip_kg = 0;       // manufacturing cost of one chip
  uint32_t horizon_years = 10;
  // Energy for the same work on next year's generation, as a fraction of this
  // year's. 1.0 means newer hardware buys nothing.
  double yearly_efficiency_ratio = 1.0;
  uint32_t chips = 1;  // fleet size; scales embodied, energy scalar is fleet-wide
};

// Throws ConfigError naming the violated bound.
void validate(const CarbonParams& cp);

// kgCO2e per year for a yearly fleet energy. Linear: kWh times intensity.
double operational_carbon_kg(double fleet_energy_j_per_year, const CarbonParams& cp);

struct LifespanPoint {
  uint32_t lifespan_years = 0;
  double operational_kg = 0;
  double embodied_kg = 0;
  double total_kg = 0;
  bool is_optimal = false;
};

struct LifespanSweep {
  std::vector<LifespanPoint> points;  // lifespan 1..horizon, in order
  uint32_t optimal_years = 0;
};

// Total horizon emissions when the fleet is replaced every L years: each year
// runs on the generation acquired at the last replacement, whose energy is
// the base scaled by the efficiency ratio raised to the acquisition year;
// every replacement wave pays the fleet's embodied cost. The argmin breaks
// ties toward the longer lifespan (fewer replacements for equal carbon).
// `policy_saving_fraction` scales the operational side, e.g. 0.15 for a
// policy that saves 15% of energy.
LifespanSweep lifespan_sweep(const CarbonParams& cp, double base_energy_j_per_year,
                             double policy_saving_fraction);

// Columns: lifespan_years,operational_kg,embodied_kg,total_kg,is_optimal
std::string lifespan_csv(const LifespanSweep& s);

}  // namespace npupg
