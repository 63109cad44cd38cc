#pragma once
// Chip description, power/gating parameters, and fleet context.
//
// All cycle counts are in core clocks. Energy bookkeeping is in joules; the
// closure between break-even time and transition energy lives here:
//   transition_energy(k) = bet[k] * (P_on - P_gated) / frequency
// so that gating a unit for exactly bet[k] idle cycles is energy-neutral.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "npupg/util.hpp"

namespace npupg {

// Ledger components. Uncore covers issue logic, sequencers, and everything
// never power-gated.
enum class Component : uint8_t { Sa, Vu, Sram, Hbm, Ici, Uncore };
constexpr size_t kNumComponents = 6;
const char* component_name(Component c);

// Power modes a gateable unit can sit in. Sleep is SRAM-only (retention).
enum class PowerMode : uint8_t { On, Off, Sleep };
const char* power_mode_name(PowerMode m);

// Software-visible policy for a unit: On pins it up, Off/Sleep pin it down,
// Auto hands control to the hardware idle detector.
enum class PolicyMode : uint8_t { On, Auto, Off, Sleep };
const char* policy_mode_name(PolicyMode m);

// (component, gated-mode) pairs that have their own delay/BET entries.
enum class GateKind : uint8_t { SaPe, SaFull, Vu, Hbm, Ici, SramSleep, SramOff };
constexpr size_t kNumGateKinds = 7;
const char* gate_kind_name(GateKind k);
bool parse_gate_kind(const std::string& s, GateKind* out);

struct ChipConfig {
  std::string name;
  double frequency_hz = 0;
  uint32_t sa_width = 0;   // square PE array, power of two
  uint32_t num_sa = 0;
  uint32_t num_vu = 0;
  uint32_t vu_lanes = 8;        // rows consumed per vector op cycle
  uint32_t vu_sublanes = 128;   // elements per lane
  uint64_t sram_bytes = 0;
  uint64_t sram_segment_bytes = 4096;
  double hbm_bandwidth_bps = 0;   // bytes per second
  uint64_t hbm_capacity_bytes = 0;
  uint32_t hbm_latency_cycles = 0;
  uint32_t ici_links = 0;
  double ici_link_bandwidth_bps = 0;
  std::string ici_topology = "2d-torus";
  uint32_t dma_queue_depth = 16;

  uint64_t num_segments() const { return sram_bytes / sram_segment_bytes; }
  double hbm_bytes_per_cycle() const { return hbm_bandwidth_bps / frequency_hz; }
  double ici_bytes_per_cycle() const {
    return ici_links * ici_link_bandwidth_bps / frequency_hz;
  }
  uint32_t vu_elems_per_cycle() const { return vu_lanes * vu_sublanes; }
};

struct PowerParams {
  // Static power, watts, in ON mode. sa/vu are per instance; sram is the whole
  // capacity; hbm/ici are the controller+interface blocks.
  double sa_static_w = 2.75;
  double vu_static_w = 1.35;
  double sram_static_w = 42.0;
  double hbm_static_w = 27.0;
  double ici_static_w = 17.0;
  double uncore_static_w = 86.0;

  // Dynamic energy coefficients, joules per event.
  double sa_mac_j = 0.7e-12;
  double vu_lane_op_j = 1.1e-12;   // per element processed
  double sram_byte_j = 1.4e-12;
  double hbm_byte_j = 30e-12;
  double ici_byte_j = 45e-12;
  double instr_issue_j = 40e-12;
  double setpm_issue_j = 20e-12;

  // Gated-mode leakage as a fraction of ON static power.
  double leak_logic_off = 0.03;
  double leak_sram_sleep = 0.25;
  double leak_sram_off = 0.002;
  // Weight-hold mode: PE keeps its weight register powered, datapath gated.
  double w_on_fraction = 0.15;

  // Per gate kind: power-state transition delay and break-even time, cycles.
  // Indexed by GateKind. Defaults model a synthesized prototype controller.
  std::array<uint32_t, kNumGateKinds> delay_cycles = {1, 10, 2, 60, 60, 4, 10};
  std::array<uint32_t, kNumGateKinds> bet_cycles = {47, 469, 32, 412, 459, 41, 82};

  double gated_ratio(GateKind k) const {
    switch (k) {
      case GateKind::SramSleep: return leak_sram_sleep;
      case GateKind::SramOff: return leak_sram_off;
      default: return leak_logic_off;
    }
  }
};

struct FleetParams {
  double duty_cycle = 0.60;  // fraction of wall time the chip runs jobs
  double pue = 1.1;
};

struct ChipBundle {
  ChipConfig chip;
  PowerParams power;
  FleetParams fleet;
};

// Static power of the single instance a GateKind refers to (one SA, one PE,
// one VU, one SRAM segment, the HBM or ICI block).
double instance_static_w(const ChipBundle& b, GateKind k);

// Full round-trip cost of one gating episode; see the closure comment above.
double transition_energy(const ChipBundle& b, GateKind k);

// Switching cost net of the ON-rate billing of the two transition windows:
//   switching = transition_energy - 2 * delay * (P_on - P_gated) / f
// Non-negative because validation requires bet > 2 * delay.
double switching_energy(const ChipBundle& b, GateKind k);

// Throws SimError (module chip-model) naming the first violated invariant.
void validate(const ChipBundle& b);

std::vector<std::string> chip_preset_names();
ChipBundle chip_preset(const std::string& name);

// Config file round trip. Loading fills defaults for omitted optional keys.
ChipBundle load_chip_config(const std::string& path);
ChipBundle parse_chip_config(const std::string& text, const std::string& origin);
std::string chip_to_toml(const ChipBundle& b);

}  // namespace npupg
