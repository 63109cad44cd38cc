#include "npupg/report.hpp"

#include <cstdio>

namespace npupg {

using nlohmann::ordered_json;

namespace {

ordered_json component_json(const ComponentEnergy& c) {
  ordered_json j;
  j["on_cycles"] = c.on_cycles;
  j["won_cycles"] = c.won_cycles;
  j["sleep_cycles"] = c.sleep_cycles;
  j["off_cycles"] = c.off_cycles;
  j["trans_cycles"] = c.trans_cycles;
  j["on_j"] = c.on_j;
  j["won_j"] = c.won_j;
  j["sleep_j"] = c.sleep_j;
  j["off_j"] = c.off_j;
  j["trans_j"] = c.trans_j;
  j["static_j"] = c.static_j();
  j["dynamic_j"] = c.dynamic_j;
  j["switching_j"] = c.switching_j;
  j["transitions"] = c.transitions;
  return j;
}

}  // namespace

ordered_json report_to_json(const SimReport& r) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["policy"] = policy_name(r.policy);
  j["chip"] = r.chip_name;

  ordered_json cy;
  cy["static"] = r.static_cycles;
  cy["run"] = r.run_cycles;
  cy["seconds"] = r.seconds;
  j["cycles"] = cy;

  ordered_json en;
  en["total_j"] = r.total_j;
  en["static_j"] = r.static_j;
  en["dynamic_j"] = r.dynamic_j;
  en["switching_j"] = r.switching_j;
  j["energy"] = en;

  ordered_json pw;
  pw["avg_w"] = r.avg_power_w;
  pw["peak_w"] = r.peak_power_w;
  pw["peak_plan_index"] = r.peak_plan_index;
  j["power"] = pw;

  ordered_json comps;
  for (size_t i = 0; i < kNumComponents; i++)
    comps[component_name(Component(i))] = component_json(r.ledger.comp[i]);
  j["components"] = comps;

  ordered_json ut;
  ut["sa_temporal"] = r.util.sa_temporal;
  ut["sa_spatial"] = r.util.sa_spatial;
  ut["vu_temporal"] = r.util.vu_temporal;
  ut["hbm_temporal"] = r.util.hbm_temporal;
  ut["ici_temporal"] = r.util.ici_temporal;
  j["utilization"] = ut;

  ordered_json st;
  st["sa_wake"] = r.stalls.sa_wake;
  st["vu_wake"] = r.stalls.vu_wake;
  st["hbm_wake"] = r.stalls.hbm_wake;
  st["ici_wake"] = r.stalls.ici_wake;
  st["sram_wake"] = r.stalls.sram_wake;
  st["dma_edge"] = r.stalls.dma_edge;
  st["barrier_drain"] = r.stalls.barrier_drain;
  j["stalls"] = st;

  ordered_json gt;
  for (size_t i = 0; i < kNumGateKinds; i++) {
    ordered_json g;
    g["episodes"] = r.gates.episodes[i];
    g["gated_cycles"] = r.gates.gated_cycles[i];
    gt[gate_kind_name(GateKind(i))] = g;
  }
  j["gating"] = gt;

  ordered_json in;
  in["count"] = r.instr_count;
  in["setpm"] = r.setpm_count;
  in["setpm_per_1000"] = r.setpm_per_1000;
  j["instrs"] = in;

  ordered_json sr;
  sr["segments"] = r.num_segments;
  ordered_json ev = ordered_json::array();
  for (const auto& [cycle, delta] : r.sram_off_events) ev.push_back({cycle, delta});
  sr["off_events"] = ev;
  j["sram"] = sr;

  ordered_json wins = ordered_json::array();
  for (const PlanWindow& w : r.plan_windows) {
    ordered_json o;
    o["plan"] = w.plan_index;
    o["begin"] = w.begin;
    o["end"] = w.end;
    o["eff_begin"] = w.eff_begin;
    o["eff_end"] = w.eff_end;
    o["dynamic_j"] = w.dynamic_j;
    o["power_w"] = w.power_w;
    wins.push_back(o);
  }
  j["plan_windows"] = wins;

  ordered_json dem = ordered_json::array();
  for (const DemandBin& b : r.sram_demand) {
    ordered_json o;
    o["demand_bytes"] = b.demand_bytes;
    o["time_fraction"] = b.time_fraction;
    dem.push_back(o);
  }
  j["sram_demand"] = dem;
  return j;
}

std::string report_json_text(const SimReport& r) {
  return report_to_json(r).dump(2) + "\n";
}

std::string report_csv_header(const std::string& key_header) {
  return key_header +
         ",policy,static_cycles,run_cycles,seconds,total_j,static_j,dynamic_j,"
         "switching_j,avg_power_w,peak_power_w,sa_temporal,sa_spatial,vu_temporal,"
         "hbm_temporal,ici_temporal,stall_cycles,setpm_count,setpm_per_1000";
}

std::string report_csv_row(const std::string& key_prefix, const SimReport& r) {
  std::string s = key_prefix;
  s += ',';
  s += policy_name(r.policy);
  auto u = [&s](uint64_t v) { s += ',' + std::to_string(v); };
  auto d = [&s](double v) { s += ',' + format_double(v); };
  u(r.static_cycles);
  u(r.run_cycles);
  d(r.seconds);
  d(r.total_j);
  d(r.static_j);
  d(r.dynamic_j);
  d(r.switching_j);
  d(r.avg_power_w);
  d(r.peak_power_w);
  d(r.util.sa_temporal);
  d(r.util.sa_spatial);
  d(r.util.vu_temporal);
  d(r.util.hbm_temporal);
  d(r.util.ici_temporal);
  u(r.stalls.stream_total());
  u(r.setpm_count);
  d(r.setpm_per_1000);
  return s;
}

std::string comparison_csv_header(const std::string& key_header) {
  return key_header +
         ",policy,run_cycles,energy_j,fleet_kwh,savings_pct,overhead_pct,"
         "avg_power_w,peak_power_w,gap_to_ideal_pp";
}

std::string comparison_csv_row(const std::string& key_prefix, const PolicyComparison& c) {
  std::string s = key_prefix;
  s += ',';
  s += policy_name(c.policy);
  s += ',' + std::to_string(c.run_cycles);
  auto d = [&s](double v) { s += ',' + format_double(v); };
  d(c.energy_j);
  d(c.fleet_kwh);
  d(c.savings_pct);
  d(c.overhead_pct);
  d(c.avg_power_w);
  d(c.peak_power_w);
  d(c.gap_to_ideal_pp);
  return s;
}

nlohmann::ordered_json analysis_to_json(const SimReport& r) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["policy"] = policy_name(r.policy);
  j["chip"] = r.chip_name;
  ordered_json ut;
  ut["sa_temporal"] = r.util.sa_temporal;
  ut["sa_spatial"] = r.util.sa_spatial;
  ut["vu_temporal"] = r.util.vu_temporal;
  ut["hbm_temporal"] = r.util.hbm_temporal;
  ut["ici_temporal"] = r.util.ici_temporal;
  ut["hbm_idle"] = 1.0 - r.util.hbm_temporal;
  ut["ici_idle"] = 1.0 - r.util.ici_temporal;
  j["utilization"] = ut;

  ordered_json shares = ordered_json::array();
  double total = r.total_j > 0 ? r.total_j : 1.0;
  for (size_t i = 0; i < kNumComponents; i++) {
    const ComponentEnergy& c = r.ledger.comp[i];
    ordered_json o;
    o["component"] = component_name(Component(i));
    o["static_j"] = c.static_j();
    o["dynamic_j"] = c.dynamic_j;
    o["switching_j"] = c.switching_j;
    o["share"] = c.total_j() / total;
    shares.push_back(o);
  }
  j["energy_shares"] = shares;

  ordered_json dem = ordered_json::array();
  for (const DemandBin& b : r.sram_demand) {
    ordered_json o;
    o["demand_bytes"] = b.demand_bytes;
    o["time_fraction"] = b.time_fraction;
    dem.push_back(o);
  }
  j["sram_demand"] = dem;
  return j;
}

}  // namespace npupg
