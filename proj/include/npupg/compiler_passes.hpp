#pragma once
// Compile-time idleness analysis and power-command instrumentation.
//
// The analyses run on the lowered instruction stream, where issue cycles are
// the static schedule. Replay shifts the stream by a nondecreasing stall
// offset applied at issue, so a command placed N cycles before an access in
// the stream keeps at least that lead at runtime; wake-ahead commands never
// turn into stalls. A unit still draining when its off command arrives just
// gates from its real idle start instead.
//
// Vector-unit idleness comes from per-unit gaps between issued operations.
// SRAM idleness is per segment, classified by what ends the idle window:
//   - next access is a write, or there is no next access: the contents are
//     dead, the window can power fully off
//   - next access is a read: contents live, retention only
// The write classification assumes producers fully rewrite a buffer before
// its consumers read it, which the lowering's segment-aligned buffers
// guarantee.
//
// Instrumentation brackets a chosen window with a power-off command at its
// start and a wake command one transition delay before its end (none when
// nothing follows). An instruction-count budget caps how many commands are
// inserted; windows are taken best-savings-first.

#include <cstdint>
#include <vector>

#include "npupg/chip_model.hpp"
#include "npupg/program_ir.hpp"

namespace npupg {

struct IdleInterval {
  GateKind kind = GateKind::Vu;  // Vu, SramSleep, or SramOff
  uint32_t unit = 0;             // vector unit index, Vu kind only
  uint64_t seg_begin = 0, seg_end = 0;  // segment index range, sram kinds
  uint64_t begin = 0, end = 0;   // static cycles, end exclusive
  bool open_ended = false;       // nothing follows; no wake command needed
  bool ends_at_runtime_barrier = false;  // closing access waits on a DMA

  uint64_t length() const { return end - begin; }
  uint64_t width() const {
    return kind == GateKind::Vu ? 1 : seg_end - seg_begin;
  }
};

// Every inter-op gap per vector unit, including the leading window before
// the first op and the trailing window to the end of the schedule. Unused
// units contribute one whole-program window.
std::vector<IdleInterval> analyze_vu_idleness(const Program& p);

// Per-segment idle windows, with adjacent segments sharing identical window
// boundaries and classification merged into one interval. Untouched segments
// merge into whole-program power-off windows.
std::vector<IdleInterval> analyze_sram_idleness(const Program& p, const ChipBundle& b);

struct InstrumentOptions {
  // Inserted power commands per original instruction. The default keeps the
  // stream rate under 30 per thousand even if fully spent.
  double budget_fraction = 0.03;
  bool gate_vu = true;
  bool gate_sram = true;
};

struct InstrumentStats {
  uint64_t base_instrs = 0;      // before instrumentation
  uint64_t candidates = 0;       // windows past the break-even threshold
  uint64_t instrumented = 0;     // windows actually bracketed
  uint64_t skipped_budget = 0;
  uint64_t setpm_count = 0;      // commands inserted (post-merge)
  double setpm_rate() const {    // commands per final instruction
    uint64_t total = base_instrs + setpm_count;
    return total ? double(setpm_count) / double(total) : 0.0;
  }
};

// Returns a copy of `p` with power commands inserted. A window qualifies
// when it is strictly longer than both the break-even time and twice the
// transition delay of its gate kind. Retention-class windows are left to the
// hardware sweeper; only dead-contents windows and vector-unit gaps are
// instrumented. Deterministic for a given program and options.
Program instrument(const Program& p, const ChipBundle& b, const InstrumentOptions& opt,
                   InstrumentStats* stats = nullptr);

}  // namespace npupg
