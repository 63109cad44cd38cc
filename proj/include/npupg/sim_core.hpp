#pragma once
// Policy replay: runs a lowered program against the gating controllers and
// produces the energy/runtime ledger for one chip.
//
// Timing model. The static schedule already encodes every data dependency,
// so replay does not reschedule; it re-derives each unit's occupancy chain
// in effective time and lets wake delays accumulate locally per unit. The
// instruction stream itself shifts by a single nondecreasing offset that
// grows in exactly two places:
//   - an instruction waiting on a DMA whose effective completion lands after
//     the instruction's shifted issue cycle (a binding transfer edge),
//   - a barrier draining whatever lag the unit chains accumulated.
// Everything else (wake stalls, queue serialization) is absorbed by the
// per-unit chains without moving the stream. Policies that gate nothing
// reproduce the static schedule cycle for cycle.
//
// run_cycles = static_cycles + final offset; the split of the difference is
// reported in StallCycles (dma_edge + barrier_drain always sums to it).

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "npupg/chip_model.hpp"
#include "npupg/compiler_passes.hpp"
#include "npupg/controllers.hpp"
#include "npupg/program_ir.hpp"
#include "npupg/workload.hpp"

namespace npupg {

// The policy ladder, weakest to strongest gating.
//   NoPG    nothing gates; power commands are ignored.
//   CompPG  whole-unit gating (SA as one block), detectors plus commands.
//   Hw      PE-level SA gating, per-unit detectors, commands executed.
//   HwSw    Hw run on an instrumented program (the caller instruments).
//   Ideal   zero-cost oracle: instant transitions, zero gated leakage.
enum class Policy : uint8_t { NoPG, CompPG, Hw, HwSw, Ideal };
constexpr size_t kNumPolicies = 5;
const char* policy_name(Policy p);
bool parse_policy(const std::string& s, Policy* out);

// Cycles after the last scheduled instruction before the chip is quiet.
// Zero here: every lowered plan ends in a barrier that already covers all
// drains, so nothing remains in flight past static_cycles + offset.
constexpr uint64_t kPipelineEpilogueCycles = 0;

// Front-end decode-to-dispatch distance: wake signals are raised when a
// bundle is decoded, this many cycles before dispatch needs its operands
// ready. A gated component whose wake fits inside the lead stalls nothing;
// only the excess surfaces as a hold. Eight cycles matches the machine's
// fetch-group granularity (one SA push group of eight rows).
constexpr uint32_t kWakeLeadCycles = 8;

struct ComponentEnergy {
  // Mode-cycle totals summed over instances. SA counts PE-cycles under
  // PE-level policies and whole-array cycles otherwise; SRAM counts
  // segment-cycles; HBM/ICI/uncore plain cycles. The five buckets always
  // sum to instances * run_cycles.
  uint64_t on_cycles = 0;
  uint64_t won_cycles = 0;    // SA weight-hold mode
  uint64_t sleep_cycles = 0;  // SRAM retention
  uint64_t off_cycles = 0;
  uint64_t trans_cycles = 0;  // billed at the ON rate
  double on_j = 0, won_j = 0, sleep_j = 0, off_j = 0, trans_j = 0;
  double dynamic_j = 0;
  double switching_j = 0;   // per-episode round-trip charges
  uint64_t transitions = 0; // completed gating episodes
  uint64_t mode_cycles() const {
    return on_cycles + won_cycles + sleep_cycles + off_cycles + trans_cycles;
  }
  double static_j() const { return on_j + won_j + sleep_j + off_j + trans_j; }
  double total_j() const { return static_j() + dynamic_j + switching_j; }
};

struct EnergyLedger {
  std::array<ComponentEnergy, kNumComponents> comp{};
  ComponentEnergy& at(Component c) { return comp[size_t(c)]; }
  const ComponentEnergy& at(Component c) const { return comp[size_t(c)]; }
  double static_j() const;
  double dynamic_j() const;
  double switching_j() const;
  double total_j() const;
};

struct StallCycles {
  // Absorbed inside per-unit chains; diagnostic only.
  uint64_t sa_wake = 0;
  uint64_t vu_wake = 0;
  uint64_t hbm_wake = 0;
  uint64_t ici_wake = 0;
  uint64_t sram_wake = 0;
  // Stream shifts; these two sum to run_cycles - static_cycles.
  uint64_t dma_edge = 0;
  uint64_t barrier_drain = 0;
  uint64_t stream_total() const { return dma_edge + barrier_drain; }
};

struct GateEventCounts {
  std::array<uint64_t, kNumGateKinds> episodes{};
  std::array<uint64_t, kNumGateKinds> gated_cycles{};
};

struct Utilization {
  double sa_temporal = 0;  // occupied SA-cycles / (num_sa * run)
  double sa_spatial = 0;   // MACs / (num_sa * width^2 * run)
  double vu_temporal = 0;
  double hbm_temporal = 0;
  double ici_temporal = 0;
};

struct PlanWindow {
  uint32_t plan_index = 0;
  uint64_t begin = 0, end = 0;          // static schedule
  uint64_t eff_begin = 0, eff_end = 0;  // after stream shifts
  double dynamic_j = 0;                 // dynamic energy attributed inside
  double power_w = 0;  // window dynamic rate plus run-average non-dynamic rate
};

// Raw controller call logs, recorded when SimOptions::keep_gate_logs is set.
// A per-cycle stepper can re-run these against naive controller models and
// compare mode totals with the interval controllers' spans.
struct GateCall {
  enum class K : uint8_t { Request, Busy, SetPolicy, Finish };
  K k = K::Request;
  uint64_t a = 0;  // Request: call cycle. Busy: start. SetPolicy/Finish: cycle.
  uint64_t b = 0;  // Request: returned ready cycle. Busy: end.
  PolicyMode mode = PolicyMode::Auto;  // SetPolicy only
};

struct UnitGateLog {
  GateKind kind = GateKind::Vu;
  uint32_t unit = 0;
  uint32_t delay = 0;
  uint32_t threshold = 0;
  PowerMode gated_mode = PowerMode::Off;
  PolicyMode initial_policy = PolicyMode::Auto;
  std::vector<GateCall> calls;
  std::vector<ModeSpan> spans;
  uint64_t episodes = 0;
};

struct SramCall {
  enum class K : uint8_t { Access, NoteBusy, SetRange, Finish };
  K k = K::Access;
  uint64_t addr = 0;   // SetRange: range start byte
  uint64_t bytes = 0;  // SetRange: range end byte (exclusive)
  uint64_t start = 0;  // call cycle
  uint64_t end = 0;    // NoteBusy end; Finish end
  uint64_t result = 0; // Access: returned ready cycle
  PolicyMode mode = PolicyMode::Auto;  // SetRange only
};

struct SramGateLog {
  uint64_t num_segments = 0;
  uint64_t segment_bytes = 0;
  uint32_t sleep_delay = 0;
  uint32_t off_delay = 0;
  uint32_t sleep_threshold = 0;
  bool sweep_enabled = false;
  uint64_t sweep_period = kSramSweepPeriod;
  std::vector<SramCall> calls;
  SramGates::Totals totals;
};

struct SimReport {
  Policy policy = Policy::NoPG;
  std::string chip_name;
  uint64_t static_cycles = 0;
  uint64_t run_cycles = 0;
  double seconds = 0;  // run_cycles / frequency
  EnergyLedger ledger;
  double static_j = 0, dynamic_j = 0, switching_j = 0, total_j = 0;
  double avg_power_w = 0;
  double peak_power_w = 0;
  uint32_t peak_plan_index = 0;
  Utilization util;
  StallCycles stalls;
  GateEventCounts gates;
  uint64_t instr_count = 0;
  uint64_t setpm_count = 0;        // power commands in the stream
  double setpm_per_1000 = 0;       // per thousand stream instructions
  uint64_t num_segments = 0;
  // Piecewise count of fully powered-off segments: (cycle, delta) events.
  std::vector<std::pair<uint64_t, int64_t>> sram_off_events;
  std::vector<PlanWindow> plan_windows;
  std::vector<DemandBin> sram_demand;  // filled when options carry the plans
  bool has_gate_logs = false;
  std::vector<UnitGateLog> gate_logs;
  SramGateLog sram_log;
};

struct SimOptions {
  Policy policy = Policy::NoPG;
  // Idle-detector trigger per gate kind, cycles; negative keeps the default
  // (a third of the break-even time, floored at 8 for vector units; the SRAM
  // sweeper waits a full sweep period, the worst-case time for the machine to
  // consume all of SRAM). Ignored under Ideal, which gates with zero
  // threshold.
  std::array<int64_t, kNumGateKinds> threshold_override = {-1, -1, -1, -1, -1, -1, -1};
  // When set, the report carries the SRAM demand histogram weighted by
  // effective plan durations.
  const std::vector<TilePlan>* plans = nullptr;
  bool keep_gate_logs = false;
};

uint32_t default_idle_threshold(const PowerParams& pw, GateKind k);

// Replays `p` on `b` under the options' policy. Throws SimError on programs
// that issue work to a unit or segment pinned off by a power command, and on
// shape mismatches between program and chip.
SimReport simulate(const Program& p, const ChipBundle& b, const SimOptions& opt);

// Fraction of run cycles during which at least ceil(seg_fraction * segments)
// SRAM segments sat in full power-off.
double off_coverage(const SimReport& r, double seg_fraction);

struct FleetEnergy {
  double busy_j = 0;
  double busy_s = 0;
  double idle_s = 0;       // parked time implied by the duty cycle
  double quiescent_w = 0;  // chip floor while parked, set by the policy
  double fleet_j = 0;      // pue * (busy_j + idle_s * quiescent_w)
  double fleet_kwh = 0;
};

// Scales one run to fleet terms: the chip repeats this job at the bundle's
// duty cycle and sits at the policy's quiescent floor in between, all behind
// the facility PUE. Throws SimError when the duty cycle is not in (0, 1].
FleetEnergy duty_cycle_adjust(const SimReport& r, const ChipBundle& b);

struct PolicyComparison {
  Policy policy = Policy::NoPG;
  uint64_t run_cycles = 0;
  double energy_j = 0;
  double fleet_kwh = 0;
  double savings_pct = 0;       // fleet energy saved vs NoPG
  double overhead_pct = 0;      // run_cycles vs NoPG
  double avg_power_w = 0;
  double peak_power_w = 0;
  double gap_to_ideal_pp = 0;   // (fleet - ideal fleet) / nopg fleet, % points
};

// Runs the requested policies on one program. HwSw runs the instrumented
// form; every other policy runs `p` as given. NoPG and Ideal are always
// computed internally for the reference columns. Rows follow request order.
// `plans` flows into each run's options (demand histograms); when `reports`
// is non-null it receives the full per-policy reports in request order.
std::vector<PolicyComparison> compare_policies(const Program& p, const ChipBundle& b,
                                               const std::vector<Policy>& policies,
                                               const InstrumentOptions& iopt = {},
                                               const std::vector<TilePlan>* plans = nullptr,
                                               std::vector<SimReport>* reports = nullptr);

}  // namespace npupg
