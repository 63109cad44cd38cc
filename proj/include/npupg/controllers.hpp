#pragma once
// Power-gating controllers. One UnitGate tracks a single gateable unit (a
// whole systolic array, a vector unit, the HBM or ICI interface); SramGates
// tracks every SRAM segment at once with O(1) work per access.
//
// Billing model for one gating episode:
//   [gate, gate+delay)  transition, billed at ON static power
//   [gate+delay, wake)  gated, billed at the leakage ratio
//   [wake, wake+delay)  transition, billed at ON static power
// plus one switching-energy charge per completed episode (counted at wake).
// With switching = transition_energy - 2*delay*(P_on - P_gated)/f, gating for
// exactly the break-even time costs exactly what staying on would have.
//
// All calls must be in nondecreasing time order per controller instance.

#include <cstdint>
#include <string>
#include <vector>

#include "npupg/chip_model.hpp"

namespace npupg {

// Idle-detector sweep cadence for SRAM retention, cycles.
constexpr uint64_t kSramSweepPeriod = 1365;

struct ModeSpan {
  uint64_t begin = 0, end = 0;
  PowerMode mode = PowerMode::On;
  bool transition = false;  // billed at ON rate whatever `mode` says
};

class UnitGate {
 public:
  // `idle_threshold` is the hardware detector's trigger, used in Auto; the
  // detected gated mode is `gated_mode` (Off for logic, Sleep for retention).
  UnitGate(uint32_t delay, uint32_t idle_threshold, PowerMode gated_mode,
           PolicyMode initial_policy);

  // setpm semantics: On pins awake (waking if needed), Off/Sleep gates
  // immediately, Auto hands back to the idle detector, waking first if the
  // unit was force-gated (so a wake-ahead hint does not pin the unit on).
  // Starting in Off/Sleep at construction begins gated with no transition
  // billed.
  void set_policy(PolicyMode m, uint64_t now);
  PolicyMode policy() const { return policy_; }

  // Demand wake: returns the cycle the unit can accept work when asked at
  // `t`, starting a wake transition if it was gated. The caller stalls to the
  // returned cycle and then reports the real span with busy().
  uint64_t request(uint64_t t);

  // Unit occupied over [start, end); start must be >= the last request()
  // result and the unit awake.
  void busy(uint64_t start, uint64_t end);

  void finish(uint64_t end);  // close out spans; no calls after this

  const std::vector<ModeSpan>& spans() const { return spans_; }
  uint64_t episodes() const { return episodes_; }
  uint64_t on_cycles() const;
  uint64_t gated_cycles() const;       // non-transition, non-ON span cycles
  uint64_t transition_cycles() const;

 private:
  enum class St : uint8_t { On, TransOff, Gated, TransOn };

  void emit(uint64_t begin, uint64_t end, PowerMode mode, bool trans);
  void advance_to(uint64_t t);
  void check_order(uint64_t t) const;

  uint32_t delay_;
  uint32_t threshold_;
  PowerMode gated_mode_;
  PolicyMode policy_;
  St state_;
  uint64_t frontier_ = 0;
  uint64_t trans_end_ = 0;
  uint64_t idle_since_ = 0;
  uint64_t episodes_ = 0;
  std::vector<ModeSpan> spans_;
  bool finished_ = false;
};

// All SRAM segments. Retention entry is automatic: a sweeping detector runs
// every `sweep_period` cycles and puts segments idle for at least
// `sleep_threshold` cycles to sleep. Full power-off happens only by explicit
// range commands. Accesses to sleeping or off segments stall one wake delay.
class SramGates {
 public:
  struct Totals {
    uint64_t on_cycles = 0;      // segment-cycles
    uint64_t sleep_cycles = 0;
    uint64_t off_cycles = 0;
    uint64_t trans_cycles = 0;   // billed at ON rate
    uint64_t sleep_episodes = 0;
    uint64_t off_episodes = 0;
  };

  SramGates(uint64_t num_segments, uint64_t segment_bytes, uint32_t sleep_delay,
            uint32_t off_delay, uint32_t sleep_threshold, bool sweep_enabled,
            uint64_t sweep_period = kSramSweepPeriod);

  // Byte-addressed access over [start, start+...) cycles; returns the actual
  // start cycle after any wake stall. `end` is computed by the caller from
  // the returned start.
  uint64_t access(uint64_t addr, uint64_t bytes, uint64_t start);
  void note_busy(uint64_t addr, uint64_t bytes, uint64_t start, uint64_t end);

  // Range power command, byte-addressed, end exclusive. Off/Sleep pin the
  // segments; On wakes and pins; Auto wakes anything force-gated and returns
  // the range to the sweeper.
  void set_range_policy(uint64_t addr_start, uint64_t addr_end, PolicyMode m, uint64_t now);

  // True if any segment in the byte range is pinned Off or Sleep by policy.
  // Work routed at such a segment is a program error, not a demand wake.
  bool any_pinned_gated(uint64_t addr, uint64_t bytes) const;

  void finish(uint64_t end);
  const Totals& totals() const { return totals_; }

  // Piecewise-constant count of segments in full power-off: (cycle, delta)
  // events, effective at transition completion.
  const std::vector<std::pair<uint64_t, int64_t>>& off_events() const { return off_events_; }
  uint64_t num_segments() const { return segs_.size(); }

 private:
  struct Seg {
    PowerMode mode = PowerMode::On;
    PolicyMode policy = PolicyMode::Auto;
    uint64_t since = 0;       // `mode` valid from here
    uint64_t trans_until = 0; // entering `mode` until here (billed ON)
    uint64_t last_end = 0;    // last access end
  };

  void advance(Seg& s, uint64_t t);
  uint64_t wake(Seg& s, uint64_t t);  // returns ready cycle
  std::pair<uint64_t, uint64_t> seg_range(uint64_t addr, uint64_t bytes) const;

  uint64_t seg_bytes_;
  uint32_t sleep_delay_, off_delay_;
  uint32_t sleep_threshold_;
  bool sweep_enabled_;
  uint64_t period_;
  std::vector<Seg> segs_;
  Totals totals_;
  std::vector<std::pair<uint64_t, int64_t>> off_events_;
  uint64_t end_ = 0;
  bool finished_ = false;
};

}  // namespace npupg
