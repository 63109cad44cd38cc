#include "npupg/chip_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "npupg/toml_lite.hpp"

namespace npupg {

const char* component_name(Component c) {
  switch (c) {
    case Component::Sa: return "sa";
    case Component::Vu: return "vu";
    case Component::Sram: return "sram";
    case Component::Hbm: return "hbm";
    case Component::Ici: return "ici";
    case Component::Uncore: return "uncore";
  }
  return "?";
}

const char* power_mode_name(PowerMode m) {
  switch (m) {
    case PowerMode::On: return "on";
    case PowerMode::Off: return "off";
    case PowerMode::Sleep: return "sleep";
  }
  return "?";
}

const char* policy_mode_name(PolicyMode m) {
  switch (m) {
    case PolicyMode::On: return "on";
    case PolicyMode::Auto: return "auto";
    case PolicyMode::Off: return "off";
    case PolicyMode::Sleep: return "sleep";
  }
  return "?";
}

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::SaPe: return "sa-pe";
    case GateKind::SaFull: return "sa";
    case GateKind::Vu: return "vu";
    case GateKind::Hbm: return "hbm";
    case GateKind::Ici: return "ici";
    case GateKind::SramSleep: return "sram-sleep";
    case GateKind::SramOff: return "sram-off";
  }
  return "?";
}

bool parse_gate_kind(const std::string& s, GateKind* out) {
  for (size_t i = 0; i < kNumGateKinds; i++) {
    GateKind k = GateKind(i);
    if (s == gate_kind_name(k)) {
      *out = k;
      return true;
    }
  }
  return false;
}

double instance_static_w(const ChipBundle& b, GateKind k) {
  switch (k) {
    case GateKind::SaFull: return b.power.sa_static_w;
    case GateKind::SaPe:
      return b.power.sa_static_w / (double(b.chip.sa_width) * b.chip.sa_width);
    case GateKind::Vu: return b.power.vu_static_w;
    case GateKind::Hbm: return b.power.hbm_static_w;
    case GateKind::Ici: return b.power.ici_static_w;
    case GateKind::SramSleep:
    case GateKind::SramOff:
      return b.power.sram_static_w / double(b.chip.num_segments());
  }
  return 0;
}

double transition_energy(const ChipBundle& b, GateKind k) {
  double p_on = instance_static_w(b, k);
  double delta = p_on * (1.0 - b.power.gated_ratio(k));
  return double(b.power.bet_cycles[size_t(k)]) * delta / b.chip.frequency_hz;
}

double switching_energy(const ChipBundle& b, GateKind k) {
  double p_on = instance_static_w(b, k);
  double delta = p_on * (1.0 - b.power.gated_ratio(k));
  double e = transition_energy(b, k) -
             2.0 * double(b.power.delay_cycles[size_t(k)]) * delta / b.chip.frequency_hz;
  return e;
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw SimError("chip-model: " + what);
}

void check(bool ok, const std::string& what) {
  if (!ok) invalid(what);
}

}  // namespace

void validate(const ChipBundle& b) {
  const ChipConfig& c = b.chip;
  const PowerParams& p = b.power;
  check(!c.name.empty(), "chip name must be non-empty");
  check(c.frequency_hz > 0, "frequency must be positive");
  check(c.sa_width > 0 && is_pow2_u64(c.sa_width), "sa_width must be a positive power of two");
  check(c.sa_width <= 256, "sa_width above 256 is not supported");
  check(c.num_sa > 0 && c.num_vu > 0, "unit counts must be positive");
  check(c.num_vu <= 64, "num_vu above 64 exceeds the setpm bitmap");
  check(c.vu_lanes > 0 && c.vu_sublanes > 0, "vu shape must be positive");
  check(c.sram_segment_bytes > 0 && c.sram_bytes > 0 &&
            c.sram_bytes % c.sram_segment_bytes == 0,
        "sram_bytes must be a positive multiple of the segment size");
  check(c.hbm_bandwidth_bps > 0 && c.hbm_capacity_bytes > 0, "hbm parameters must be positive");
  check(c.ici_links > 0 && c.ici_link_bandwidth_bps > 0, "ici parameters must be positive");
  check(c.dma_queue_depth > 0, "dma_queue_depth must be positive");

  check(p.leak_logic_off >= 0 && p.leak_logic_off < 1, "logic off leakage ratio outside [0,1)");
  check(p.leak_sram_sleep >= 0 && p.leak_sram_sleep < 1, "sram sleep leakage ratio outside [0,1)");
  check(p.leak_sram_off >= 0 && p.leak_sram_off < 1, "sram off leakage ratio outside [0,1)");
  check(p.leak_sram_off <= p.leak_sram_sleep,
        "sram off leakage must not exceed sleep leakage");
  check(p.w_on_fraction >= 0 && p.w_on_fraction <= 1, "w_on_fraction outside [0,1]");
  for (size_t i = 0; i < kNumGateKinds; i++) {
    check(p.delay_cycles[i] > 0, std::string("zero transition delay for ") +
                                     gate_kind_name(GateKind(i)));
    check(p.bet_cycles[i] > 2 * p.delay_cycles[i],
          std::string("break-even time must exceed twice the transition delay for ") +
              gate_kind_name(GateKind(i)));
  }
  check(b.fleet.duty_cycle > 0 && b.fleet.duty_cycle <= 1, "duty_cycle outside (0,1]");
  check(b.fleet.pue >= 1, "pue below 1");
}

namespace {

constexpr double GB = 1e9;
constexpr double MiB = 1024.0 * 1024.0;

ChipBundle make_preset(const std::string& name, double mhz, uint32_t width,
                       uint32_t sas, uint32_t vus, double sram_mib, double hbm_gbps,
                       double hbm_gib, uint32_t hbm_lat, uint32_t links,
                       double link_gbps, const std::string& topo) {
  ChipBundle b;
  b.chip.name = name;
  b.chip.frequency_hz = mhz * 1e6;
  b.chip.sa_width = width;
  b.chip.num_sa = sas;
  b.chip.num_vu = vus;
  b.chip.sram_bytes = uint64_t(sram_mib * MiB);
  b.chip.hbm_bandwidth_bps = hbm_gbps * GB;
  b.chip.hbm_capacity_bytes = uint64_t(hbm_gib * 1024.0 * MiB);
  b.chip.hbm_latency_cycles = hbm_lat;
  b.chip.ici_links = links;
  b.chip.ici_link_bandwidth_bps = link_gbps * GB;
  b.chip.ici_topology = topo;
  return b;
}

void power_defaults(PowerParams& p, double sa_w, double vu_w, double sram_w,
                    double hbm_w, double ici_w, double uncore_w, double mac_pj,
                    double vu_pj, double sram_pj, double hbm_pj, double ici_pj) {
  p.sa_static_w = sa_w;
  p.vu_static_w = vu_w;
  p.sram_static_w = sram_w;
  p.hbm_static_w = hbm_w;
  p.ici_static_w = ici_w;
  p.uncore_static_w = uncore_w;
  p.sa_mac_j = mac_pj * 1e-12;
  p.vu_lane_op_j = vu_pj * 1e-12;
  p.sram_byte_j = sram_pj * 1e-12;
  p.hbm_byte_j = hbm_pj * 1e-12;
  p.ici_byte_j = ici_pj * 1e-12;
}

}  // namespace

std::vector<std::string> chip_preset_names() {
  return {"npu-a", "npu-b", "npu-c", "npu-d", "npu-e"};
}

ChipBundle chip_preset(const std::string& name) {
  ChipBundle b;
  if (name == "npu-a") {
    b = make_preset(name, 700, 128, 2, 4, 32, 600, 16, 280, 4, 62, "2d-torus");
    power_defaults(b.power, 2.0, 1.1, 12.0, 8.0, 7.0, 40.0, 1.8, 2.4, 2.8, 36, 50);
  } else if (name == "npu-b") {
    b = make_preset(name, 940, 128, 4, 4, 32, 900, 32, 376, 4, 70, "2d-torus");
    power_defaults(b.power, 2.2, 1.2, 13.0, 11.0, 8.0, 48.0, 1.6, 2.2, 2.6, 34, 48);
  } else if (name == "npu-c") {
    b = make_preset(name, 1050, 128, 8, 4, 128, 1200, 32, 420, 6, 50, "3d-torus");
    power_defaults(b.power, 2.4, 1.3, 40.0, 14.0, 9.0, 62.0, 0.85, 1.3, 1.6, 32, 45);
  } else if (name == "npu-d") {
    b = make_preset(name, 1750, 128, 8, 6, 128, 2765, 95, 700, 6, 100, "3d-torus");
    power_defaults(b.power, 2.75, 1.35, 42.0, 27.0, 17.0, 86.0, 0.7, 1.1, 1.4, 30, 45);
  } else if (name == "npu-e") {
    b = make_preset(name, 2000, 256, 8, 8, 256, 7400, 192, 800, 6, 150, "3d-torus");
    power_defaults(b.power, 9.0, 1.5, 70.0, 45.0, 22.0, 110.0, 0.5, 0.9, 1.2, 26, 40);
  } else {
    throw ConfigError("unknown chip preset '" + name + "'");
  }
  validate(b);
  return b;
}

ChipBundle parse_chip_config(const std::string& text, const std::string& origin) {
  toml::Table root = toml::parse(text, origin);
  const toml::Table* chip = root.subtable("chip");
  if (!chip) throw ConfigError(origin + ": missing [chip] section");

  ChipBundle b;
  // Base preset gives power defaults appropriate for the family; a file for a
  // custom chip starts from the generic defaults in PowerParams.
  std::string base = chip->get_string("base_preset", "");
  if (!base.empty()) b = chip_preset(base);

  ChipConfig& c = b.chip;
  c.name = chip->get_string("name");
  c.frequency_hz = chip->get_double("frequency_mhz") * 1e6;
  c.sa_width = uint32_t(chip->get_int("sa_width"));
  c.num_sa = uint32_t(chip->get_int("num_sa"));
  c.num_vu = uint32_t(chip->get_int("num_vu"));
  c.vu_lanes = uint32_t(chip->get_int("vu_lanes", c.vu_lanes));
  c.vu_sublanes = uint32_t(chip->get_int("vu_sublanes", c.vu_sublanes));
  c.sram_bytes = uint64_t(chip->get_double("sram_mib") * MiB);
  c.sram_segment_bytes =
      uint64_t(chip->get_int("sram_segment_bytes", int64_t(c.sram_segment_bytes)));
  c.hbm_bandwidth_bps = chip->get_double("hbm_bandwidth_gbps") * GB;
  c.hbm_capacity_bytes = uint64_t(chip->get_double("hbm_capacity_gib") * 1024.0 * MiB);
  c.hbm_latency_cycles =
      uint32_t(chip->get_int("hbm_latency_cycles", int64_t(c.hbm_latency_cycles ? c.hbm_latency_cycles : 500)));
  c.ici_links = uint32_t(chip->get_int("ici_links"));
  c.ici_link_bandwidth_bps = chip->get_double("ici_link_bandwidth_gbps") * GB;
  c.ici_topology = chip->get_string("ici_topology", c.ici_topology);
  c.dma_queue_depth = uint32_t(chip->get_int("dma_queue_depth", c.dma_queue_depth));

  PowerParams& p = b.power;
  if (const toml::Table* pw = root.subtable("power")) {
    p.sa_static_w = pw->get_double("sa_static_w", p.sa_static_w);
    p.vu_static_w = pw->get_double("vu_static_w", p.vu_static_w);
    p.sram_static_w = pw->get_double("sram_static_w", p.sram_static_w);
    p.hbm_static_w = pw->get_double("hbm_static_w", p.hbm_static_w);
    p.ici_static_w = pw->get_double("ici_static_w", p.ici_static_w);
    p.uncore_static_w = pw->get_double("uncore_static_w", p.uncore_static_w);
    p.sa_mac_j = pw->get_double("sa_mac_pj", p.sa_mac_j * 1e12) * 1e-12;
    p.vu_lane_op_j = pw->get_double("vu_lane_op_pj", p.vu_lane_op_j * 1e12) * 1e-12;
    p.sram_byte_j = pw->get_double("sram_byte_pj", p.sram_byte_j * 1e12) * 1e-12;
    p.hbm_byte_j = pw->get_double("hbm_byte_pj", p.hbm_byte_j * 1e12) * 1e-12;
    p.ici_byte_j = pw->get_double("ici_byte_pj", p.ici_byte_j * 1e12) * 1e-12;
    p.instr_issue_j = pw->get_double("instr_issue_pj", p.instr_issue_j * 1e12) * 1e-12;
    p.setpm_issue_j = pw->get_double("setpm_issue_pj", p.setpm_issue_j * 1e12) * 1e-12;
    p.w_on_fraction = pw->get_double("w_on_fraction", p.w_on_fraction);
    if (const toml::Table* lk = pw->subtable("leakage")) {
      p.leak_logic_off = lk->get_double("logic_off_ratio", p.leak_logic_off);
      p.leak_sram_sleep = lk->get_double("sram_sleep_ratio", p.leak_sram_sleep);
      p.leak_sram_off = lk->get_double("sram_off_ratio", p.leak_sram_off);
    }
    auto read_cycles = [&](const char* sect, std::array<uint32_t, kNumGateKinds>& arr) {
      if (const toml::Table* t = pw->subtable(sect)) {
        for (size_t i = 0; i < kNumGateKinds; i++) {
          std::string key = gate_kind_name(GateKind(i));
          for (char& ch : key)
            if (ch == '-') ch = '_';
          arr[i] = uint32_t(t->get_int(key, arr[i]));
        }
      }
    };
    read_cycles("delay_cycles", p.delay_cycles);
    read_cycles("bet_cycles", p.bet_cycles);
  }
  if (const toml::Table* fl = root.subtable("fleet")) {
    b.fleet.duty_cycle = fl->get_double("duty_cycle", b.fleet.duty_cycle);
    b.fleet.pue = fl->get_double("pue", b.fleet.pue);
  }
  validate(b);
  return b;
}

ChipBundle load_chip_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open chip config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_chip_config(ss.str(), path);
}

std::string chip_to_toml(const ChipBundle& b) {
  const ChipConfig& c = b.chip;
  const PowerParams& p = b.power;
  std::ostringstream o;
  auto num = [](double v) { return format_double(v); };
  o << "[chip]\n";
  o << "name = \"" << c.name << "\"\n";
  o << "frequency_mhz = " << num(c.frequency_hz / 1e6) << "\n";
  o << "sa_width = " << c.sa_width << "\n";
  o << "num_sa = " << c.num_sa << "\n";
  o << "num_vu = " << c.num_vu << "\n";
  o << "vu_lanes = " << c.vu_lanes << "\n";
  o << "vu_sublanes = " << c.vu_sublanes << "\n";
  o << "sram_mib = " << num(double(c.sram_bytes) / MiB) << "\n";
  o << "sram_segment_bytes = " << c.sram_segment_bytes << "\n";
  o << "hbm_bandwidth_gbps = " << num(c.hbm_bandwidth_bps / GB) << "\n";
  o << "hbm_capacity_gib = " << num(double(c.hbm_capacity_bytes) / (1024.0 * MiB)) << "\n";
  o << "hbm_latency_cycles = " << c.hbm_latency_cycles << "\n";
  o << "ici_links = " << c.ici_links << "\n";
  o << "ici_link_bandwidth_gbps = " << num(c.ici_link_bandwidth_bps / GB) << "\n";
  o << "ici_topology = \"" << c.ici_topology << "\"\n";
  o << "dma_queue_depth = " << c.dma_queue_depth << "\n";
  o << "\n[power]\n";
  o << "sa_static_w = " << num(p.sa_static_w) << "\n";
  o << "vu_static_w = " << num(p.vu_static_w) << "\n";
  o << "sram_static_w = " << num(p.sram_static_w) << "\n";
  o << "hbm_static_w = " << num(p.hbm_static_w) << "\n";
  o << "ici_static_w = " << num(p.ici_static_w) << "\n";
  o << "uncore_static_w = " << num(p.uncore_static_w) << "\n";
  o << "sa_mac_pj = " << num(p.sa_mac_j * 1e12) << "\n";
  o << "vu_lane_op_pj = " << num(p.vu_lane_op_j * 1e12) << "\n";
  o << "sram_byte_pj = " << num(p.sram_byte_j * 1e12) << "\n";
  o << "hbm_byte_pj = " << num(p.hbm_byte_j * 1e12) << "\n";
  o << "ici_byte_pj = " << num(p.ici_byte_j * 1e12) << "\n";
  o << "instr_issue_pj = " << num(p.instr_issue_j * 1e12) << "\n";
  o << "setpm_issue_pj = " << num(p.setpm_issue_j * 1e12) << "\n";
  o << "w_on_fraction = " << num(p.w_on_fraction) << "\n";
  o << "\n[power.leakage]\n";
  o << "logic_off_ratio = " << num(p.leak_logic_off) << "\n";
  o << "sram_sleep_ratio = " << num(p.leak_sram_sleep) << "\n";
  o << "sram_off_ratio = " << num(p.leak_sram_off) << "\n";
  auto cycles_section = [&](const char* sect, const std::array<uint32_t, kNumGateKinds>& arr) {
    o << "\n[power." << sect << "]\n";
    for (size_t i = 0; i < kNumGateKinds; i++) {
      std::string key = gate_kind_name(GateKind(i));
      for (char& ch : key)
        if (ch == '-') ch = '_';
      o << key << " = " << arr[i] << "\n";
    }
  };
  cycles_section("delay_cycles", p.delay_cycles);
  cycles_section("bet_cycles", p.bet_cycles);
  o << "\n[fleet]\n";
  o << "duty_cycle = " << num(b.fleet.duty_cycle) << "\n";
  o << "pue = " << num(b.fleet.pue) << "\n";
  return o.str();
}

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; prec++) {
    snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0;
    sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos &&
      s.find_first_of("0123456789") != std::string::npos && s != "inf" && s != "-inf")
    s += ".0";  // keep floats recognizably float in TOML output
  return s;
}

}  // namespace npupg
