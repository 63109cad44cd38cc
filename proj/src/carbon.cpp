#include "npupg/carbon.hpp"

#include <cmath>

namespace npupg {

namespace {
constexpr double kJoulesPerKwh = 3.6e6;
}

void validate(const CarbonParams& cp) {
  if (!(cp.intensity_kg_per_kwh > 0))
    throw ConfigError("carbon: carbon intensity must be positive");
  if (!(cp.yearly_efficiency_ratio > 0 && cp.yearly_efficiency_ratio <= 1.0))
    throw ConfigError("carbon: yearly efficiency ratio must be in (0, 1]");
  if (cp.horizon_years < 1) throw ConfigError("carbon: horizon must be at least one year");
  if (cp.embodied_per_chip_kg < 0)
    throw ConfigError("carbon: embodied carbon cannot be negative");
  if (cp.chips < 1) throw ConfigError("carbon: fleet needs at least one chip");
}

double operational_carbon_kg(double fleet_energy_j_per_year, const CarbonParams& cp) {
  return fleet_energy_j_per_year / kJoulesPerKwh * cp.intensity_kg_per_kwh;
}

LifespanSweep lifespan_sweep(const CarbonParams& cp, double base_energy_j_per_year,
                             double policy_saving_fraction) {
  validate(cp);
  double yearly = base_energy_j_per_year * (1.0 - policy_saving_fraction);
  LifespanSweep out;
  double best = 0;
  for (uint32_t L = 1; L <= cp.horizon_years; L++) {
    LifespanPoint pt;
    pt.lifespan_years = L;
    for (uint32_t year = 0; year < cp.horizon_years; year++) {
      uint32_t acquired = (year / L) * L;
      double energy = yearly * std::pow(cp.yearly_efficiency_ratio, double(acquired));
      pt.operational_kg += operational_carbon_kg(energy, cp);
    }
    uint64_t waves = ceil_div_u64(cp.horizon_years, L);
    pt.embodied_kg = double(waves) * cp.embodied_per_chip_kg * cp.chips;
    pt.total_kg = pt.operational_kg + pt.embodied_kg;
    // <= so equal-carbon choices land on the longer lifespan.
    if (out.points.empty() || pt.total_kg <= best) {
      best = pt.total_kg;
      out.optimal_years = L;
    }
    out.points.push_back(pt);
  }
  for (LifespanPoint& pt : out.points) pt.is_optimal = pt.lifespan_years == out.optimal_years;
  return out;
}

std::string lifespan_csv(const LifespanSweep& s) {
  std::string out = "lifespan_years,operational_kg,embodied_kg,total_kg,is_optimal\n";
  for (const LifespanPoint& pt : s.points) {
    out += std::to_string(pt.lifespan_years);
    out += ',' + format_double(pt.operational_kg);
    out += ',' + format_double(pt.embodied_kg);
    out += ',' + format_double(pt.total_kg);
    out += pt.is_optimal ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace npupg
