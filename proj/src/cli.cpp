#include "npupg/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "npupg/carbon.hpp"
#include "npupg/compiler_passes.hpp"
#include "npupg/report.hpp"
#include "npupg/toml_lite.hpp"

namespace fs = std::filesystem;

namespace npupg {

namespace {

// §6.4-style cooling capex figure, dollars per watt of chip power.
constexpr double kCoolingUsdPerWatt = 7.0;

std::string env_or(const char* var, const std::string& dflt) {
  const char* v = std::getenv(var);
  return v && *v ? v : dflt;
}

void atomic_write(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cli: cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw ConfigError("cli: short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw ConfigError("cli: cannot move '" + tmp.string() + "' into place: " + ec.message());
}

// Bare names resolve against built-in presets first, then the config dir;
// anything with a path separator or .toml suffix is a file path.
bool looks_like_path(const std::string& s) {
  return s.find('/') != std::string::npos ||
         (s.size() > 5 && s.rfind(".toml") == s.size() - 5);
}

ChipBundle resolve_chip(const std::string& name) {
  if (!looks_like_path(name)) {
    auto names = chip_preset_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) return chip_preset(name);
    fs::path p = fs::path(config_dir()) / (name + ".toml");
    if (fs::exists(p)) return load_chip_config(p.string());
    throw ConfigError("cli: unknown chip '" + name + "': not a preset (" +
                      [&names] {
                        std::string s;
                        for (const auto& n : names) s += s.empty() ? n : ", " + n;
                        return s;
                      }() +
                      ") and no file at " + p.string());
  }
  return load_chip_config(name);
}

ModelSpec resolve_model(const std::string& name) {
  if (!looks_like_path(name)) {
    auto names = model_preset_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) return model_preset(name);
    fs::path p = fs::path(config_dir()) / (name + ".toml");
    if (fs::exists(p)) return load_model_spec(p.string());
    throw ConfigError("cli: unknown workload '" + name + "': not a preset and no file at " +
                      p.string());
  }
  return load_model_spec(name);
}

// Point modifications of a loaded bundle. Slower transitions scale the
// break-even times with the delays so the energy closure stays physical.
void apply_overrides(ChipBundle* b, double delay_mult,
                     const std::vector<std::string>& bet_overrides, double duty, double pue,
                     double leak_off) {
  if (!(delay_mult > 0)) throw ConfigError("cli: --delay-mult must be positive");
  if (delay_mult != 1.0) {
    for (size_t i = 0; i < kNumGateKinds; i++) {
      b->power.delay_cycles[i] = std::max<uint32_t>(
          1, uint32_t(std::llround(b->power.delay_cycles[i] * delay_mult)));
      b->power.bet_cycles[i] = std::max<uint32_t>(
          1, uint32_t(std::llround(b->power.bet_cycles[i] * delay_mult)));
    }
  }
  for (const std::string& ov : bet_overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("cli: --bet-override wants kind=cycles, got '" + ov + "'");
    GateKind k;
    if (!parse_gate_kind(ov.substr(0, eq), &k))
      throw ConfigError("cli: unknown gate kind '" + ov.substr(0, eq) +
                        "' (sa-pe, sa, vu, hbm, ici, sram-sleep, sram-off)");
    long long v = 0;
    try {
      v = std::stoll(ov.substr(eq + 1));
    } catch (const std::exception&) {
      v = 0;
    }
    if (v <= 0) throw ConfigError("cli: --bet-override cycles must be a positive integer");
    b->power.bet_cycles[size_t(k)] = uint32_t(v);
  }
  if (duty >= 0) b->fleet.duty_cycle = duty;
  if (pue >= 0) b->fleet.pue = pue;
  if (leak_off >= 0) b->power.leak_logic_off = leak_off;
  try {
    validate(*b);
  } catch (const SimError& e) {
    // Overrides are configuration; invariant breaks here are exit-2 material.
    throw ConfigError(e.what());
  }
}

std::vector<Policy> parse_policies(const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("cli: need at least one policy");
  std::vector<Policy> out;
  for (const std::string& n : names) {
    Policy p;
    if (!parse_policy(n, &p))
      throw ConfigError("cli: unknown policy '" + n + "' (nopg, comppg, hw, hwsw, ideal)");
    out.push_back(p);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    std::string item = s.substr(start, comma - start);
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

struct BuiltWorkload {
  ModelSpec spec;
  Graph graph;
  std::vector<TilePlan> plans;
  Program prog;
};

BuiltWorkload build_workload(const ModelSpec& spec, const ChipBundle& b) {
  BuiltWorkload w;
  w.spec = spec;
  w.graph = build_model_graph(spec);
  w.plans = tile_and_fuse(w.graph, b.chip);
  w.prog = lower(w.graph, w.plans, b.chip);
  return w;
}

// Carbon inputs that ride next to CarbonParams in manifests and flags.
struct CarbonCfg {
  CarbonParams cp;
  double base_energy_j = -1;
  double saving_fraction = 0;
  double chip_watts = -1;  // enables the cooling capex line when set
};

void load_manifest(const std::string& path, RunManifest* m, CarbonCfg* cc) {
  toml::Table t = toml::parse_file(path);
  if (const toml::Table* run = t.subtable("run")) {
    m->chip = run->get_string("chip", m->chip);
    m->workload = run->get_string("workload", m->workload);
    if (run->has("policies")) m->policies = run->get_string_array("policies");
    m->out_dir = run->get_string("out_dir", m->out_dir);
    m->delay_mult = run->get_double("delay_mult", m->delay_mult);
    m->jobs = int(run->get_int("jobs", m->jobs));
    if (run->has("bet_overrides")) m->bet_overrides = run->get_string_array("bet_overrides");
  }
  if (const toml::Table* sw = t.subtable("sweep")) {
    if (sw->has("leak_off")) m->leak_off_axis = sw->get_double_array("leak_off");
    if (sw->has("delay_mult")) m->delay_mult_axis = sw->get_double_array("delay_mult");
    if (sw->has("chips")) m->chip_axis = sw->get_string_array("chips");
  }
  if (const toml::Table* fl = t.subtable("fleet")) {
    m->duty_cycle = fl->get_double("duty_cycle", m->duty_cycle);
    m->pue = fl->get_double("pue", m->pue);
  }
  if (const toml::Table* cb = t.subtable("carbon")) {
    cc->cp.intensity_kg_per_kwh = cb->get_double("intensity", cc->cp.intensity_kg_per_kwh);
    cc->cp.embodied_per_chip_kg =
        cb->get_double("embodied_per_chip", cc->cp.embodied_per_chip_kg);
    cc->cp.horizon_years = uint32_t(cb->get_int("horizon_years", cc->cp.horizon_years));
    cc->cp.yearly_efficiency_ratio =
        cb->get_double("yearly_efficiency_ratio", cc->cp.yearly_efficiency_ratio);
    cc->cp.chips = uint32_t(cb->get_int("chips", cc->cp.chips));
    cc->base_energy_j = cb->get_double("base_energy_j_per_year", cc->base_energy_j);
    cc->saving_fraction = cb->get_double("saving_fraction", cc->saving_fraction);
    cc->chip_watts = cb->get_double("chip_watts", cc->chip_watts);
  }
}

int cmd_simulate(const RunManifest& m) {
  ChipBundle b = resolve_chip(m.chip);
  apply_overrides(&b, m.delay_mult, m.bet_overrides, m.duty_cycle, m.pue, -1);
  BuiltWorkload w = build_workload(resolve_model(m.workload), b);
  std::vector<Policy> pols = parse_policies(m.policies);
  std::vector<SimReport> reports;
  std::vector<PolicyComparison> rows = compare_policies(w.prog, b, pols, {}, &w.plans, &reports);

  fs::path out(m.out_dir);
  for (const SimReport& r : reports) {
    fs::path f = out / (m.chip + "_" + m.workload + "_" + policy_name(r.policy) + ".json");
    atomic_write(f, report_json_text(r));
  }
  std::string key = m.chip + "," + m.workload;
  std::string csv = comparison_csv_header("chip,workload") + "\n";
  for (const PolicyComparison& row : rows) csv += comparison_csv_row(key, row) + "\n";
  atomic_write(out / "comparison.csv", csv);

  for (const PolicyComparison& row : rows)
    std::cout << m.chip << " " << m.workload << " " << policy_name(row.policy)
              << ": energy_j=" << format_double(row.energy_j)
              << " fleet_kwh=" << format_double(row.fleet_kwh)
              << " savings_pct=" << format_double(row.savings_pct)
              << " overhead_pct=" << format_double(row.overhead_pct) << "\n";
  return 0;
}

int cmd_analyze(const RunManifest& m) {
  ChipBundle b = resolve_chip(m.chip);
  apply_overrides(&b, m.delay_mult, m.bet_overrides, m.duty_cycle, m.pue, -1);
  BuiltWorkload w = build_workload(resolve_model(m.workload), b);
  std::vector<Policy> pols = parse_policies(m.policies);
  SimOptions o;
  o.policy = pols.front();
  o.plans = &w.plans;
  SimReport r = simulate(w.prog, b, o);

  fs::path out(m.out_dir);
  atomic_write(out / "analysis.json", analysis_to_json(r).dump(2) + "\n");

  std::string dem = "chip,workload,demand_bytes,time_fraction\n";
  for (const DemandBin& bin : r.sram_demand)
    dem += m.chip + "," + m.workload + "," + std::to_string(bin.demand_bytes) + "," +
           format_double(bin.time_fraction) + "\n";
  atomic_write(out / "sram_demand.csv", dem);

  std::string sh = "chip,workload,component,static_j,dynamic_j,switching_j,share\n";
  double total = r.total_j > 0 ? r.total_j : 1.0;
  for (size_t i = 0; i < kNumComponents; i++) {
    const ComponentEnergy& c = r.ledger.comp[i];
    sh += m.chip + "," + m.workload + "," + component_name(Component(i)) + "," +
          format_double(c.static_j()) + "," + format_double(c.dynamic_j) + "," +
          format_double(c.switching_j) + "," + format_double(c.total_j() / total) + "\n";
  }
  atomic_write(out / "energy_shares.csv", sh);

  std::cout << m.chip << " " << m.workload << " " << policy_name(r.policy)
            << ": sa_temporal=" << format_double(r.util.sa_temporal)
            << " sa_spatial=" << format_double(r.util.sa_spatial)
            << " vu_temporal=" << format_double(r.util.vu_temporal)
            << " hbm_temporal=" << format_double(r.util.hbm_temporal)
            << " ici_temporal=" << format_double(r.util.ici_temporal) << "\n";
  return 0;
}

struct SweepCell {
  std::string chip;
  double leak_off = -1;  // <0 = keep config value
  double delay_mult = 1;
};

int cmd_sweep(const RunManifest& m) {
  if (m.jobs < 1) throw ConfigError("cli: --jobs must be at least 1");
  std::vector<Policy> pols = parse_policies(m.policies);
  ModelSpec spec = resolve_model(m.workload);

  std::vector<std::string> chips = m.chip_axis.empty()
                                       ? std::vector<std::string>{m.chip}
                                       : m.chip_axis;
  std::vector<double> leaks = m.leak_off_axis.empty() ? std::vector<double>{-1}
                                                      : m.leak_off_axis;
  std::vector<double> dmults = m.delay_mult_axis.empty()
                                   ? std::vector<double>{m.delay_mult}
                                   : m.delay_mult_axis;
  // Resolve every chip up front so axis typos fail before any work runs.
  for (const std::string& c : chips) resolve_chip(c);

  std::vector<SweepCell> cells;
  for (const std::string& c : chips)
    for (double dm : dmults)
      for (double lk : leaks) cells.push_back({c, lk, dm});

  struct CellOut {
    double leak_used = 0;
    std::vector<PolicyComparison> rows;
  };
  std::vector<CellOut> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        const SweepCell& cell = cells[i];
        ChipBundle b = resolve_chip(cell.chip);
        apply_overrides(&b, cell.delay_mult, m.bet_overrides, m.duty_cycle, m.pue,
                        cell.leak_off);
        BuiltWorkload w = build_workload(spec, b);
        results[i].leak_used = b.power.leak_logic_off;
        results[i].rows = compare_policies(w.prog, b, pols);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  size_t nthreads = std::min<size_t>(size_t(m.jobs), cells.size());
  std::vector<std::thread> pool;
  for (size_t i = 1; i < nthreads; i++) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  std::string csv = comparison_csv_header("chip,workload,leak_off,delay_mult") + "\n";
  for (size_t i = 0; i < cells.size(); i++) {
    std::string key = cells[i].chip + "," + m.workload + "," +
                      format_double(results[i].leak_used) + "," +
                      format_double(cells[i].delay_mult);
    for (const PolicyComparison& row : results[i].rows)
      csv += comparison_csv_row(key, row) + "\n";
  }
  fs::path out(m.out_dir);
  atomic_write(out / "sweep.csv", csv);

  // Savings should weaken as OFF leakage grows; flag each (chip, delay,
  // policy) series along the leak axis in the order the axis was given.
  if (leaks.size() >= 2) {
    std::string mono = "chip,workload,policy,delay_mult,savings_monotone_in_leak_off\n";
    for (const std::string& c : chips)
      for (double dm : dmults)
        for (size_t pi = 0; pi < pols.size(); pi++) {
          bool ok = true;
          double prev = 0;
          bool first = true;
          for (size_t i = 0; i < cells.size(); i++) {
            if (cells[i].chip != c || cells[i].delay_mult != dm) continue;
            double sv = results[i].rows[pi].savings_pct;
            if (!first && sv > prev + 1e-9) ok = false;
            prev = sv;
            first = false;
          }
          mono += c + "," + m.workload + "," + policy_name(pols[pi]) + "," +
                  format_double(dm) + "," + (ok ? "1" : "0") + "\n";
        }
    atomic_write(out / "monotonicity.csv", mono);
  }
  std::cout << "sweep: " << cells.size() << " cells, " << pols.size()
            << " policies -> " << (out / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_carbon(const RunManifest& m, const CarbonCfg& cc) {
  if (!(cc.base_energy_j >= 0))
    throw ConfigError("cli: carbon needs --base-energy-j (fleet joules per year)");
  validate(cc.cp);
  if (cc.saving_fraction < 0 || cc.saving_fraction >= 1)
    throw ConfigError("cli: --saving must be in [0, 1)");
  LifespanSweep s = lifespan_sweep(cc.cp, cc.base_energy_j, cc.saving_fraction);
  fs::path out(m.out_dir);
  atomic_write(out / "lifespan.csv", lifespan_csv(s));
  std::cout << "optimal_lifespan_years=" << s.optimal_years
            << " total_kg=" << format_double(s.points[s.optimal_years - 1].total_kg) << "\n";
  if (cc.chip_watts >= 0)
    std::cout << "cooling_capex_usd="
              << format_double(kCoolingUsdPerWatt * cc.chip_watts * cc.cp.chips) << "\n";
  return 0;
}

int cmd_dump_program(const RunManifest& m, bool do_instrument, double budget,
                     const std::string& out_file) {
  ChipBundle b = resolve_chip(m.chip);
  apply_overrides(&b, m.delay_mult, m.bet_overrides, m.duty_cycle, m.pue, -1);
  BuiltWorkload w = build_workload(resolve_model(m.workload), b);
  Program p = w.prog;
  if (do_instrument) {
    InstrumentOptions io;
    io.budget_fraction = budget;
    p = instrument(w.prog, b, io);
  }
  std::string text = dump_program(p);
  if (out_file.empty()) std::cout << text;
  else atomic_write(out_file, text);
  return 0;
}

int cmd_validate_config(const std::string& chip, const std::string& workload) {
  if (chip.empty() && workload.empty())
    throw ConfigError("cli: validate-config wants --chip and/or --workload");
  if (!chip.empty()) {
    ChipBundle b = resolve_chip(chip);
    std::cout << "ok chip " << b.chip.name << ": " << b.chip.num_sa << " sa x "
              << b.chip.sa_width << ", " << b.chip.num_vu << " vu, "
              << (b.chip.sram_bytes >> 20) << " MiB sram\n";
  }
  if (!workload.empty()) {
    ModelSpec spec = resolve_model(workload);
    validate(spec);
    Graph g = build_model_graph(spec);
    std::cout << "ok workload " << spec.name << " (" << spec.family << "): "
              << g.ops.size() << " ops\n";
  }
  return 0;
}

}  // namespace

std::string config_dir() { return env_or("NPUPG_CONFIG_DIR", "configs"); }

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"deterministic NPU power-gating simulator"};
  app.require_subcommand(1);

  RunManifest m;
  m.out_dir = env_or("NPUPG_OUT_DIR", "out");
  CarbonCfg cc;
  std::string manifest_path;
  std::string policy_csv;

  // Shared options; each subcommand gets its own copies bound to the same
  // storage, so a flag wins over the manifest which wins over defaults.
  std::vector<CLI::Option*> policy_opts;
  auto add_common = [&](CLI::App* sub, bool with_workload) {
    sub->add_option("--manifest", manifest_path, "TOML run manifest; flags override it");
    sub->add_option("--chip", m.chip, "chip preset name or config path");
    if (with_workload)
      sub->add_option("--workload", m.workload, "workload preset name or spec path");
    policy_opts.push_back(
        sub->add_option("--policy", policy_csv, "comma-separated policy list"));
    sub->add_option("--out", m.out_dir, "output directory");
    sub->add_option("--delay-mult", m.delay_mult,
                    "scale transition delays and break-even times");
    sub->add_option("--bet-override", m.bet_overrides,
                    "kind=cycles break-even override, repeatable");
    sub->add_option("--duty-cycle", m.duty_cycle, "fleet duty cycle override");
    sub->add_option("--pue", m.pue, "facility PUE override");
  };

  CLI::App* sim = app.add_subcommand("simulate", "run policies on one workload, emit reports");
  add_common(sim, true);
  CLI::App* ana = app.add_subcommand("analyze", "utilization and energy-share study");
  add_common(ana, true);
  CLI::App* swp = app.add_subcommand("sweep", "sensitivity grid over chips/leakage/delays");
  add_common(swp, true);
  swp->add_option("--leak-off", m.leak_off_axis, "OFF-leakage ratio axis values");
  swp->add_option("--delay-mults", m.delay_mult_axis, "delay multiplier axis values");
  swp->add_option("--chips", m.chip_axis, "chip generation axis (preset names)");
  swp->add_option("--jobs", m.jobs, "concurrent sweep cells");

  CLI::App* car = app.add_subcommand("carbon", "operational/embodied carbon and lifespan sweep");
  car->add_option("--manifest", manifest_path, "TOML run manifest; flags override it");
  car->add_option("--out", m.out_dir, "output directory");
  car->add_option("--intensity", cc.cp.intensity_kg_per_kwh, "grid kgCO2e per kWh");
  car->add_option("--embodied", cc.cp.embodied_per_chip_kg, "embodied kgCO2e per chip");
  car->add_option("--horizon", cc.cp.horizon_years, "planning horizon, years");
  car->add_option("--ratio", cc.cp.yearly_efficiency_ratio,
                  "next-gen energy per current-gen energy, per year");
  car->add_option("--chips", cc.cp.chips, "fleet size");
  car->add_option("--base-energy-j", cc.base_energy_j, "fleet joules per year, ungated");
  car->add_option("--saving", cc.saving_fraction, "gating energy-saving fraction");
  car->add_option("--chip-watts", cc.chip_watts, "per-chip watts for the cooling capex line");

  CLI::App* dmp = app.add_subcommand("dump-program", "lower a workload and print its stream");
  add_common(dmp, true);
  bool do_instrument = false;
  double budget = 0.03;
  std::string dump_out;
  dmp->add_flag("--instrument", do_instrument, "insert power commands first");
  dmp->add_option("--budget", budget, "instrumentation budget, commands per instruction");
  dmp->add_option("--to", dump_out, "write to this file instead of stdout");

  CLI::App* val = app.add_subcommand("validate-config", "load and check configs");
  std::string val_chip, val_workload;
  val->add_option("--chip", val_chip, "chip preset name or config path");
  val->add_option("--workload", val_workload, "workload preset name or spec path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!manifest_path.empty()) {
      RunManifest from_file;
      from_file.out_dir = m.out_dir;
      CarbonCfg cc_file;
      load_manifest(manifest_path, &from_file, &cc_file);
      // Flags already sit in m/cc; take manifest values only where no flag
      // was given. Scalar-by-scalar merge against the parse counts.
      auto take = [&](CLI::App* sub, const std::string& flag, auto* dst, const auto& src) {
        CLI::Option* o = sub->get_option_no_throw(flag);
        if (o == nullptr || o->count() == 0) *dst = src;
      };
      CLI::App* sub = app.get_subcommands().front();
      take(sub, "--chip", &m.chip, from_file.chip);
      if (sub != car) take(sub, "--workload", &m.workload, from_file.workload);
      take(sub, "--out", &m.out_dir, from_file.out_dir);
      take(sub, "--delay-mult", &m.delay_mult, from_file.delay_mult);
      take(sub, "--bet-override", &m.bet_overrides, from_file.bet_overrides);
      take(sub, "--duty-cycle", &m.duty_cycle, from_file.duty_cycle);
      take(sub, "--pue", &m.pue, from_file.pue);
      take(sub, "--leak-off", &m.leak_off_axis, from_file.leak_off_axis);
      take(sub, "--delay-mults", &m.delay_mult_axis, from_file.delay_mult_axis);
      if (sub == swp) take(sub, "--chips", &m.chip_axis, from_file.chip_axis);
      take(sub, "--jobs", &m.jobs, from_file.jobs);
      const CLI::Option* pol = sub->get_option_no_throw("--policy");
      if ((pol == nullptr || pol->count() == 0) && !from_file.policies.empty())
        m.policies = from_file.policies;
      take(sub, "--intensity", &cc.cp.intensity_kg_per_kwh, cc_file.cp.intensity_kg_per_kwh);
      take(sub, "--embodied", &cc.cp.embodied_per_chip_kg, cc_file.cp.embodied_per_chip_kg);
      take(sub, "--horizon", &cc.cp.horizon_years, cc_file.cp.horizon_years);
      take(sub, "--ratio", &cc.cp.yearly_efficiency_ratio, cc_file.cp.yearly_efficiency_ratio);
      if (sub == car) take(sub, "--chips", &cc.cp.chips, cc_file.cp.chips);
      take(sub, "--base-energy-j", &cc.base_energy_j, cc_file.base_energy_j);
      take(sub, "--saving", &cc.saving_fraction, cc_file.saving_fraction);
      take(sub, "--chip-watts", &cc.chip_watts, cc_file.chip_watts);
    }
    for (CLI::Option* o : policy_opts)
      if (o->count() > 0) m.policies = split_csv(policy_csv);

    if (app.got_subcommand(sim)) return cmd_simulate(m);
    if (app.got_subcommand(ana)) return cmd_analyze(m);
    if (app.got_subcommand(swp)) return cmd_sweep(m);
    if (app.got_subcommand(car)) return cmd_carbon(m, cc);
    if (app.got_subcommand(dmp)) return cmd_dump_program(m, do_instrument, budget, dump_out);
    if (app.got_subcommand(val)) return cmd_validate_config(val_chip, val_workload);
    throw ConfigError("cli: no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace npupg
