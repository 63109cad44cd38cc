#include "npupg/sim_core.hpp"

#include <algorithm>
#include <cmath>

#include "npupg/sa_engine.hpp"

namespace npupg {

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::NoPG: return "nopg";
    case Policy::CompPG: return "comppg";
    case Policy::Hw: return "hw";
    case Policy::HwSw: return "hwsw";
    case Policy::Ideal: return "ideal";
  }
  return "?";
}

bool parse_policy(const std::string& s, Policy* out) {
  for (size_t i = 0; i < kNumPolicies; i++) {
    if (s == policy_name(Policy(i))) {
      *out = Policy(i);
      return true;
    }
  }
  return false;
}

double EnergyLedger::static_j() const {
  double s = 0;
  for (const ComponentEnergy& c : comp) s += c.static_j();
  return s;
}
double EnergyLedger::dynamic_j() const {
  double s = 0;
  for (const ComponentEnergy& c : comp) s += c.dynamic_j;
  return s;
}
double EnergyLedger::switching_j() const {
  double s = 0;
  for (const ComponentEnergy& c : comp) s += c.switching_j;
  return s;
}
double EnergyLedger::total_j() const { return static_j() + dynamic_j() + switching_j(); }

uint32_t default_idle_threshold(const PowerParams& pw, GateKind k) {
  uint32_t t = pw.bet_cycles[size_t(k)] / 3;
  if (k == GateKind::Vu) t = std::max<uint32_t>(t, 8);
  return t;
}

namespace {

// Controller front end used by the replay. Controllers require nondecreasing
// call times per instance; unit chains are individually monotone but lag each
// other, so every call is clamped to the instance's own high-water clock.
// Clamping never loses information: a request made "in the past" of the
// controller's clock is a request by a unit whose chain simply had not
// caught up; serving it at the clock is the same answer the hardware gives.
struct UnitDriver {
  UnitGate gate;
  uint64_t clock = 0;
  bool logging = false;
  UnitGateLog log;

  UnitDriver(GateKind k, uint32_t u, uint32_t delay, uint32_t threshold,
             PolicyMode initial, bool lg)
      : gate(delay, threshold, PowerMode::Off, initial), logging(lg) {
    log.kind = k;
    log.unit = u;
    log.delay = delay;
    log.threshold = threshold;
    log.gated_mode = PowerMode::Off;
    log.initial_policy = initial;
  }

  uint64_t request(uint64_t t) {
    uint64_t at = std::max(t, clock);
    clock = at;
    uint64_t r = gate.request(at);
    if (logging) log.calls.push_back({GateCall::K::Request, at, r, PolicyMode::Auto});
    return std::max(r, t);
  }
  // Wake trigger raised kWakeLeadCycles before the dispatch that needs the
  // unit; a wake shorter than the lead costs nothing. Returns local ready
  // time, never before `need`. The clamp shifts trigger and need together.
  // A second request lands on the dispatch cycle itself: the detector can
  // fire inside the lead window, and the busy that follows must never hit a
  // gated unit. After a dispatch-time wake the unit goes busy immediately,
  // so no third probe can be needed.
  uint64_t request_lead(uint64_t need) {
    uint64_t trig = need > kWakeLeadCycles ? need - kWakeLeadCycles : 0;
    uint64_t at = std::max(trig, clock);
    clock = at;
    uint64_t r = gate.request(at);
    if (logging) log.calls.push_back({GateCall::K::Request, at, r, PolicyMode::Auto});
    uint64_t need_c = std::max(need, at);
    uint64_t local = r > need_c ? need + (r - need_c) : need;
    uint64_t disp = std::max(need_c, r);
    if (disp > at) {
      uint64_t at2 = std::max(disp, clock);
      clock = at2;
      uint64_t r2 = gate.request(at2);
      if (logging) log.calls.push_back({GateCall::K::Request, at2, r2, PolicyMode::Auto});
      if (r2 > at2) {
        local += r2 - at2;
        // An aborted gate entry moves the gate's frontier past the call time.
        // The unit is in transition until r2 and the busy that follows starts
        // there, so the clock may ride forward to the wake completion; a
        // later trigger clamped here would observe the same wake anyway.
        clock = r2;
      }
    }
    return local;
  }
  void busy(uint64_t start, uint64_t end) {
    uint64_t s = std::max(start, clock);
    if (end < s) end = s;
    if (s == end) return;
    clock = s;
    gate.busy(s, end);
    if (logging) log.calls.push_back({GateCall::K::Busy, s, end, PolicyMode::Auto});
  }
  void set_policy(PolicyMode m, uint64_t t) {
    uint64_t at = std::max(t, clock);
    clock = at;
    gate.set_policy(m, at);
    if (logging) log.calls.push_back({GateCall::K::SetPolicy, at, 0, m});
  }
  void finish(uint64_t end) {
    uint64_t e = std::max(end, clock);
    gate.finish(e);
    if (logging) log.calls.push_back({GateCall::K::Finish, e, 0, PolicyMode::Auto});
  }
};

struct SramDriver {
  SramGates g;
  uint64_t seg_bytes;
  // Per-segment command frontier. Segments are independent power domains:
  // a wake trigger for a cold segment must not serialize behind another
  // segment's busy note, or a dense walk across a buffer loses its whole
  // wake lead at every segment boundary. Within one segment the clamp
  // contract is unchanged: commands never run backward, skew shifts work
  // later in that segment's timeline and never turns into a stall.
  std::vector<uint64_t> hw;
  bool logging = false;
  std::vector<SramCall> calls;

  SramDriver(uint64_t segs, uint64_t seg_bytes_, uint32_t sleep_delay, uint32_t off_delay,
             uint32_t threshold, bool sweep, uint64_t period, bool lg)
      : g(segs, seg_bytes_, sleep_delay, off_delay, threshold, sweep, period),
        seg_bytes(seg_bytes_),
        hw(segs, 0),
        logging(lg) {}

  std::pair<uint64_t, uint64_t> segs_of(uint64_t addr, uint64_t bytes) const {
    if (bytes == 0) return {0, 0};
    return {addr / seg_bytes, (addr + bytes - 1) / seg_bytes + 1};
  }

  // `at` must already sit at or past hw[seg]; sram_ready owns that clamp
  // because the effective wake lead depends on it.
  uint64_t wake_one(uint64_t seg, uint64_t at) {
    hw[seg] = at;
    uint64_t r = g.access(seg * seg_bytes, 1, at);
    if (logging) calls.push_back({SramCall::K::Access, seg * seg_bytes, 1, at, 0, r, PolicyMode::Auto});
    return r;
  }
  void note(uint64_t addr, uint64_t bytes, uint64_t start, uint64_t end) {
    auto [first, last] = segs_of(addr, bytes);
    for (uint64_t i = first; i < last; i++) {
      uint64_t s = std::max(start, hw[i]);
      hw[i] = s;
      uint64_t e = s + (end - start);  // clamp shifts, never shortens
      g.note_busy(i * seg_bytes, 1, s, e);
      if (logging) calls.push_back({SramCall::K::NoteBusy, i * seg_bytes, 1, s, e, 0, PolicyMode::Auto});
    }
  }
  void set_range(uint64_t a0, uint64_t a1, PolicyMode m, uint64_t t) {
    if (a1 < a0) throw SimError("SramGates: inverted address range");
    auto [first, last] = segs_of(a0, a1 - a0);
    for (uint64_t i = first; i < last; i++) {
      uint64_t at = std::max(t, hw[i]);
      hw[i] = at;
      g.set_range_policy(i * seg_bytes, i * seg_bytes + 1, m, at);
      if (logging) calls.push_back({SramCall::K::SetRange, i * seg_bytes, i * seg_bytes + 1, at, 0, 0, m});
    }
  }
  void finish(uint64_t end) {
    uint64_t e = end;
    for (uint64_t v : hw) e = std::max(e, v);
    g.finish(e);
    if (logging) {
      // Per-segment frontiers emit in program order, which is monotone per
      // segment but not globally; a time-cursor consumer needs sorted calls.
      std::stable_sort(calls.begin(), calls.end(),
                       [](const SramCall& x, const SramCall& y) { return x.start < y.start; });
      calls.push_back({SramCall::K::Finish, 0, 0, e, e, 0, PolicyMode::Auto});
    }
  }
};

struct Replay {
  const Program& p;
  const ChipBundle& b;
  const SimOptions& opt;
  Policy pol;
  bool pe_level;    // SA gated per PE instead of as one block
  bool exec_setpm;  // power commands take effect
  bool zero;        // ideal: instant transitions, zero gated leakage
  bool logging;
  uint32_t W;
  double f;

  // Effective-time occupancy chains, one per unit.
  std::vector<uint64_t> sa_occ;    // array busy (loads, push groups)
  std::vector<uint64_t> sa_drain;  // last wave fully out; next load waits on it
  std::vector<uint64_t> vu_free;
  uint64_t hbm_free = 0;
  uint64_t ici_free = 0;
  std::vector<uint64_t> dma_done;
  std::vector<uint8_t> dma_seen;
  uint64_t max_done = 0;
  uint64_t off = 0;  // stream shift; grows at transfer edges and barriers

  std::vector<UnitDriver> sa_g;  // whole-array policies only
  std::vector<UnitDriver> vu_g;
  std::vector<UnitDriver> hbm_g;
  std::vector<UnitDriver> ici_g;
  SramDriver sram;

  // Open weight tile per SA under PE-level gating. A tile is billed when the
  // next load replaces it (or at the end of the run): load phase counts the
  // powered block fully on, the streaming phase uses the closed-form PE
  // trace, and any scheduling gaps between push groups hold weights in W_on.
  struct Tile {
    bool active = false;
    bool streamed = false;
    uint32_t rows_on = 0, cols_on = 0;
    uint64_t load_cycles = 0;
    uint64_t load_end = 0;
    uint64_t first_push = 0;
    uint64_t last_push_end = 0;
    uint64_t rows = 0;
  };
  std::vector<Tile> tile;
  std::vector<uint8_t> had_tile;
  uint64_t pe_on = 0, pe_won = 0, pe_eps = 0;

  std::array<double, kNumComponents> dyn{};
  uint64_t sa_busy = 0, vu_busy = 0, hbm_busy = 0, ici_busy = 0, macs = 0;
  StallCycles st;
  uint64_t setpms = 0;

  std::vector<PlanWindow> wins;
  size_t wi = 0;

  Replay(const Program& pr, const ChipBundle& bu, const SimOptions& o)
      : p(pr),
        b(bu),
        opt(o),
        pol(o.policy),
        pe_level(o.policy == Policy::Hw || o.policy == Policy::HwSw ||
                 o.policy == Policy::Ideal),
        exec_setpm(o.policy == Policy::CompPG || o.policy == Policy::Hw ||
                   o.policy == Policy::HwSw),
        zero(o.policy == Policy::Ideal),
        logging(o.keep_gate_logs),
        W(bu.chip.sa_width),
        f(bu.chip.frequency_hz),
        sram(bu.chip.num_segments(), bu.chip.sram_segment_bytes, delay(GateKind::SramSleep),
             delay(GateKind::SramOff), sweep_threshold(),
             o.policy != Policy::NoPG, zero ? 1 : kSramSweepPeriod, o.keep_gate_logs) {}

  uint32_t delay(GateKind k) const { return zero ? 0 : b.power.delay_cycles[size_t(k)]; }
  uint32_t threshold(GateKind k) const {
    if (zero) return 0;
    int64_t ov = opt.threshold_override[size_t(k)];
    if (ov >= 0) return uint32_t(ov);
    return default_idle_threshold(b.power, k);
  }
  // The sweeper sleeps a segment only after a full period of idleness: one
  // period is the worst-case time for the machine to consume all of SRAM, so
  // a segment untouched that long is behind every consumption front. A
  // BET-scale window here would churn the live working set through sleep.
  uint32_t sweep_threshold() const {
    if (zero) return 0;
    int64_t ov = opt.threshold_override[size_t(GateKind::SramSleep)];
    if (ov >= 0) return uint32_t(ov);
    return uint32_t(kSramSweepPeriod);
  }

  void add_dyn(Component c, double j) {
    dyn[size_t(c)] += j;
    if (wi < wins.size()) wins[wi].dynamic_j += j;
  }

  // Windows close as the stream passes their static end. A plan's own
  // barrier sits exactly at the span end and is attributed inward, so the
  // closing offset includes that barrier's drain.
  void advance_windows(uint64_t issue, bool barrier) {
    while (wi < wins.size() &&
           (barrier ? issue > wins[wi].end : issue >= wins[wi].end)) {
      wins[wi].eff_end = wins[wi].end + off;
      wi++;
      if (wi < wins.size()) wins[wi].eff_begin = wins[wi].begin + off;
    }
  }

  [[noreturn]] void violation(size_t i, const Instr& in, const char* what) {
    throw SimError("simulate: instr " + std::to_string(i) + " (" +
                   instr_kind_name(in.kind) + " @" + std::to_string(in.issue_cycle) +
                   "): " + what);
  }

  void check_unit_policy(size_t i, const Instr& in, const UnitDriver& d) {
    PolicyMode m = d.gate.policy();
    if (m == PolicyMode::Off || m == PolicyMode::Sleep)
      violation(i, in, "work issued to a unit pinned off by a power command");
  }

  // Wakes every touched segment, iterating because a wake can cross a sweep
  // boundary that re-gates another touched segment. Converges in a couple of
  // rounds: each extra round means a wake straddled a boundary.
  uint64_t sram_ready(size_t i, const Instr& in, uint64_t t) {
    if (in.sram.empty()) return t;
    for (const SramTouch& tc : in.sram)
      if (sram.g.any_pinned_gated(tc.addr, tc.bytes))
        violation(i, in, "access to an SRAM segment pinned off by a power command");
    // Round 0 fires the wake triggers, kWakeLeadCycles before the dispatch,
    // each against its own segment's frontier; a wake that fits the lead is
    // free. Later rounds land on the dispatch cycle itself: they confirm no
    // touched segment was re-swept inside the window, so the busy note that
    // follows always finds every segment awake. A segment whose frontier sits
    // past the dispatch absorbs the skew in its own timeline instead of
    // stalling the caller.
    uint64_t trig = t > kWakeLeadCycles ? t - kWakeLeadCycles : 0;
    uint64_t d = t;
    for (int round = 0; round < 16; round++) {
      uint64_t nd = d;
      for (const SramTouch& tc : in.sram) {
        auto [first, last] = sram.segs_of(tc.addr, tc.bytes);
        for (uint64_t s = first; s < last; s++) {
          uint64_t c = std::max(round == 0 ? trig : d, sram.hw[s]);
          uint64_t r = sram.wake_one(s, c);
          uint64_t base = std::max(c, d);
          if (r > base) nd = std::max(nd, d + (r - base));
        }
      }
      if (nd == d && round > 0) return d;
      d = nd;
    }
    throw SimError("simulate: segment wake did not settle; wake delay exceeds sweep period");
  }

  // Demand side of one instruction: wake the unit (if this policy gates it)
  // and the touched segments until both agree on a start cycle. The unit can
  // re-gate while segments wake only if its threshold is below the wake
  // delay, hence the joint fixpoint.
  uint64_t acquire(size_t i, const Instr& in, UnitDriver* d, uint64_t q,
                   uint64_t* unit_stall, uint64_t* sram_stall) {
    uint64_t s = q;
    for (int round = 0; round < 16; round++) {
      uint64_t r = d ? d->request_lead(s) : s;
      *unit_stall += r - s;
      uint64_t a = sram_ready(i, in, r);
      *sram_stall += a - r;
      if (a == s) return s;
      s = a;
    }
    throw SimError("simulate: unit wake did not settle; idle threshold below wake delay");
  }

  void note_touches(const Instr& in, uint64_t s, uint64_t dur) {
    uint64_t e = s + std::max<uint64_t>(dur, 1);
    double bytes = 0;
    for (const SramTouch& tc : in.sram) {
      sram.note(tc.addr, tc.bytes, s, e);
      bytes += double(tc.bytes);
    }
    if (bytes > 0) add_dyn(Component::Sram, bytes * b.power.sram_byte_j);
  }

  void close_tile(uint32_t u) {
    Tile& tl = tile[u];
    if (!tl.active) return;
    if (!pe_level) {
      tl.active = false;
      return;
    }
    uint64_t rc = uint64_t(tl.rows_on) * tl.cols_on;
    if (tl.streamed) {
      if (zero) {
        // Perfect gating: a PE is powered exactly while rows pass through it.
        pe_on += rc * tl.rows;
      } else {
        SaTileExec ex;
        ex.width = W;
        ex.m_rows = tl.rows;
        ex.masks.row_on = Bitmap(W);
        ex.masks.col_on = Bitmap(W);
        for (uint32_t r = 0; r < tl.rows_on; r++) ex.masks.row_on.set(r);
        for (uint32_t c = 0; c < tl.cols_on; c++) ex.masks.col_on.set(c);
        PeModeTrace tr = analytic_pe_trace(ex);
        pe_on += tr.on_cycles;
        // Gaps between push groups (and before the first one) hold weights.
        pe_won += tr.won_cycles + rc * ((tl.last_push_end - tl.load_end) - tl.rows);
      }
    }
    tl.active = false;
  }

  void open_tile(uint32_t u, const Instr& in, uint64_t s) {
    close_tile(u);
    Tile& tl = tile[u];
    tl.active = true;
    tl.streamed = false;
    tl.rows_on = in.rows_on;
    tl.cols_on = in.cols_on;
    tl.load_cycles = in.cycles;
    tl.load_end = s + in.cycles;
    tl.first_push = tl.load_end;
    tl.last_push_end = tl.load_end;
    tl.rows = 0;
    if (pe_level) {
      uint64_t rc = uint64_t(in.rows_on) * in.cols_on;
      pe_on += rc * in.cycles;  // weight shift-in keeps the block powered
      pe_eps += rc;
    }
    had_tile[u] = 1;
  }

  void exec_power_command(const Instr& in, uint64_t t) {
    const SetpmSpec& sp = in.setpm;
    switch (sp.variant) {
      case SetpmSpec::Variant::SramRange:
        sram.set_range(sp.sram_start, sp.sram_end, sp.mode, t);
        return;
      case SetpmSpec::Variant::FuReg:
        // Lowering and instrumentation only emit immediates; a register
        // operand would need the scalar core's state, which replay has not.
        throw SimError("simulate: register-operand power command is unresolved at replay");
      case SetpmSpec::Variant::FuImm: break;
    }
    auto apply = [&](std::vector<UnitDriver>& gs) {
      uint32_t n = uint32_t(std::min<size_t>(gs.size(), sp.fu_mask.width()));
      for (uint32_t u = 0; u < n; u++)
        if (sp.fu_mask.get(u)) gs[u].set_policy(sp.mode, t);
    };
    switch (sp.fu) {
      case Component::Sa:
        if (!pe_level) apply(sa_g);  // per-PE hardware supersedes block commands
        break;
      case Component::Vu: apply(vu_g); break;
      case Component::Hbm: apply(hbm_g); break;
      case Component::Ici: apply(ici_g); break;
      default: break;
    }
  }

  SimReport run() {
    validate_program(p);
    if (p.num_sa != b.chip.num_sa || p.num_vu != b.chip.num_vu ||
        p.sram_bytes != b.chip.sram_bytes)
      throw SimError("simulate: program was lowered for a different chip shape (" +
                     p.chip_name + " vs " + b.chip.name + ")");

    PolicyMode up = pol == Policy::NoPG ? PolicyMode::On : PolicyMode::Auto;
    if (!pe_level)
      for (uint32_t s = 0; s < p.num_sa; s++)
        sa_g.emplace_back(GateKind::SaFull, s, delay(GateKind::SaFull),
                          threshold(GateKind::SaFull), up, logging);
    for (uint32_t v = 0; v < p.num_vu; v++)
      vu_g.emplace_back(GateKind::Vu, v, delay(GateKind::Vu), threshold(GateKind::Vu), up,
                        logging);
    hbm_g.emplace_back(GateKind::Hbm, 0, delay(GateKind::Hbm), threshold(GateKind::Hbm), up,
                       logging);
    ici_g.emplace_back(GateKind::Ici, 0, delay(GateKind::Ici), threshold(GateKind::Ici), up,
                       logging);

    sa_occ.assign(p.num_sa, 0);
    sa_drain.assign(p.num_sa, 0);
    vu_free.assign(p.num_vu, 0);
    tile.assign(p.num_sa, Tile{});
    had_tile.assign(p.num_sa, 0);

    uint32_t max_id = 0;
    for (const Instr& in : p.instrs) max_id = std::max({max_id, in.dma_id, in.wait_dma_id});
    dma_done.assign(size_t(max_id) + 1, 0);
    dma_seen.assign(size_t(max_id) + 1, 0);

    wins.reserve(p.plan_spans.size());
    for (const PlanSpan& sp : p.plan_spans) {
      PlanWindow w;
      w.plan_index = sp.plan_index;
      w.begin = sp.begin;
      w.end = sp.end;
      wins.push_back(w);
    }

    for (size_t i = 0; i < p.instrs.size(); i++) {
      const Instr& in = p.instrs[i];
      advance_windows(in.issue_cycle, in.kind == InstrKind::Barrier);
      uint64_t t = in.issue_cycle + off;

      if (in.wait_dma_id) {
        if (!dma_seen[in.wait_dma_id])
          violation(i, in, "waits on a transfer that never issued");
        uint64_t dep = dma_done[in.wait_dma_id];
        if (dep > t) {
          st.dma_edge += dep - t;
          off += dep - t;
          t = dep;
        }
      }

      add_dyn(Component::Uncore,
              in.kind == InstrKind::Setpm ? b.power.setpm_issue_j : b.power.instr_issue_j);

      switch (in.kind) {
        case InstrKind::SaLoadWeights: {
          UnitDriver* d = pe_level ? nullptr : &sa_g[in.unit];
          if (d) check_unit_policy(i, in, *d);
          uint64_t q = std::max(t, sa_drain[in.unit]);
          if (pe_level && !zero && had_tile[in.unit] && sa_drain[in.unit] >= t) {
            // The new tile butts the previous one's drain: the one-cycle
            // PE wake-ahead has nowhere to hide and surfaces as a stall.
            q += 1;
            st.sa_wake += 1;
          }
          uint64_t s = acquire(i, in, d, q, &st.sa_wake, &st.sram_wake);
          if (d) d->busy(s, s + in.cycles);
          open_tile(in.unit, in, s);
          note_touches(in, s, in.cycles);
          sa_occ[in.unit] = s + in.cycles;
          sa_drain[in.unit] = s + in.cycles;
          sa_busy += in.cycles;
          break;
        }
        case InstrKind::SaPush: {
          UnitDriver* d = pe_level ? nullptr : &sa_g[in.unit];
          if (d) check_unit_policy(i, in, *d);
          uint64_t q = std::max(t, sa_occ[in.unit]);
          uint64_t s = acquire(i, in, d, q, &st.sa_wake, &st.sram_wake);
          Tile& tl = tile[in.unit];
          uint32_t drain = (tl.active ? tl.rows_on + tl.cols_on : 2) - 1;
          if (d) d->busy(s, s + in.cycles + drain);  // block stays up through the drain
          if (pe_level && tl.active) {
            if (!tl.streamed) {
              tl.streamed = true;
              tl.first_push = s;
            }
            tl.last_push_end = s + in.cycles;
            tl.rows += in.cycles;
          }
          note_touches(in, s, in.cycles);
          add_dyn(Component::Sa, double(in.macs) * b.power.sa_mac_j);
          macs += in.macs;
          sa_occ[in.unit] = s + in.cycles;
          sa_drain[in.unit] = s + in.cycles + drain;
          sa_busy += in.cycles;
          break;
        }
        case InstrKind::VuOp: {
          UnitDriver& d = vu_g[in.unit];
          check_unit_policy(i, in, d);
          uint64_t q = std::max(t, vu_free[in.unit]);
          uint64_t s = acquire(i, in, &d, q, &st.vu_wake, &st.sram_wake);
          d.busy(s, s + in.cycles);
          note_touches(in, s, in.cycles);
          add_dyn(Component::Vu, double(in.elems) * b.power.vu_lane_op_j);
          vu_free[in.unit] = s + in.cycles;
          vu_busy += in.cycles;
          break;
        }
        case InstrKind::DmaIn:
        case InstrKind::DmaOut:
        case InstrKind::HostDmaOp: {
          UnitDriver& d = hbm_g[0];
          check_unit_policy(i, in, d);
          uint64_t q = std::max(t, hbm_free);
          uint64_t s = acquire(i, in, &d, q, &st.hbm_wake, &st.sram_wake);
          d.busy(s, s + in.cycles);
          note_touches(in, s, in.cycles);
          add_dyn(Component::Hbm, double(in.bytes) * b.power.hbm_byte_j);
          hbm_free = s + in.cycles;
          uint64_t done = s + b.chip.hbm_latency_cycles + in.cycles;
          dma_done[in.dma_id] = done;
          dma_seen[in.dma_id] = 1;
          max_done = std::max(max_done, done);
          hbm_busy += in.cycles;
          break;
        }
        case InstrKind::IciOp: {
          UnitDriver& d = ici_g[0];
          check_unit_policy(i, in, d);
          uint64_t q = std::max(t, ici_free);
          uint64_t s = acquire(i, in, &d, q, &st.ici_wake, &st.sram_wake);
          d.busy(s, s + in.cycles);
          note_touches(in, s, in.cycles);
          add_dyn(Component::Ici, double(in.bytes) * b.power.ici_byte_j);
          ici_free = s + in.cycles;
          ici_busy += in.cycles;
          break;
        }
        case InstrKind::Setpm: {
          setpms++;
          if (exec_setpm) exec_power_command(in, t);
          break;
        }
        case InstrKind::Barrier: {
          uint64_t dep = std::max({hbm_free, ici_free, max_done});
          for (uint64_t v : sa_drain) dep = std::max(dep, v);
          for (uint64_t v : vu_free) dep = std::max(dep, v);
          if (dep > t) {
            st.barrier_drain += dep - t;
            off += dep - t;
            t = dep;
          }
          break;
        }
      }
    }

    uint64_t run_cycles = p.static_cycles + off;
    for (uint64_t v : sa_drain) run_cycles = std::max(run_cycles, v);
    for (uint64_t v : vu_free) run_cycles = std::max(run_cycles, v);
    run_cycles = std::max({run_cycles, hbm_free, ici_free, max_done});

    for (uint32_t u = 0; u < p.num_sa; u++) close_tile(u);
    for (UnitDriver& d : sa_g) d.finish(run_cycles);
    for (UnitDriver& d : vu_g) d.finish(run_cycles);
    hbm_g[0].finish(run_cycles);
    ici_g[0].finish(run_cycles);
    sram.finish(run_cycles);
    for (; wi < wins.size(); wi++) {
      if (wins[wi].eff_begin == 0 && wins[wi].begin != 0)
        wins[wi].eff_begin = wins[wi].begin + off;
      wins[wi].eff_end = wins[wi].end + off;
    }

    return assemble(run_cycles);
  }

  void fill_units(ComponentEnergy& ce, const std::vector<UnitDriver>& gs, GateKind k) {
    for (const UnitDriver& d : gs) {
      ce.on_cycles += d.gate.on_cycles();
      ce.off_cycles += d.gate.gated_cycles();
      ce.trans_cycles += d.gate.transition_cycles();
      ce.transitions += d.gate.episodes();
    }
    double w = instance_static_w(b, k);
    double ratio = zero ? 0.0 : b.power.gated_ratio(k);
    ce.on_j = double(ce.on_cycles) * w / f;
    ce.off_j = double(ce.off_cycles) * ratio * w / f;
    ce.trans_j = double(ce.trans_cycles) * w / f;
    ce.switching_j = zero ? 0.0 : double(ce.transitions) * switching_energy(b, k);
  }

  void check_conserved(const ComponentEnergy& ce, uint64_t expect, const char* what) {
    if (ce.mode_cycles() != expect)
      throw SimError(std::string("simulate: ") + what + " mode cycles do not cover the run (" +
                     std::to_string(ce.mode_cycles()) + " vs " + std::to_string(expect) + ")");
  }

  SimReport assemble(uint64_t run_cycles) {
    SimReport r;
    r.policy = pol;
    r.chip_name = b.chip.name;
    r.static_cycles = p.static_cycles;
    r.run_cycles = run_cycles;
    r.seconds = double(run_cycles) / f;
    r.stalls = st;
    r.instr_count = p.instrs.size();
    r.setpm_count = setpms;
    r.setpm_per_1000 = r.instr_count ? 1000.0 * double(setpms) / double(r.instr_count) : 0.0;
    r.num_segments = sram.g.num_segments();

    EnergyLedger& lg = r.ledger;

    ComponentEnergy& sa = lg.at(Component::Sa);
    if (pe_level) {
      uint64_t cap = uint64_t(W) * W * p.num_sa * run_cycles;
      if (pe_on + pe_won > cap)
        throw SimError("simulate: PE accounting exceeds the array-cycle capacity");
      sa.on_cycles = pe_on;
      sa.won_cycles = pe_won;
      sa.off_cycles = cap - pe_on - pe_won;
      double w = instance_static_w(b, GateKind::SaPe);
      sa.on_j = double(sa.on_cycles) * w / f;
      sa.won_j = double(sa.won_cycles) * (zero ? 0.0 : b.power.w_on_fraction) * w / f;
      sa.off_j = double(sa.off_cycles) * (zero ? 0.0 : b.power.leak_logic_off) * w / f;
      sa.transitions = pe_eps;
      sa.switching_j = zero ? 0.0 : double(pe_eps) * switching_energy(b, GateKind::SaPe);
      check_conserved(sa, cap, "systolic array");
    } else {
      fill_units(sa, sa_g, GateKind::SaFull);
      check_conserved(sa, uint64_t(p.num_sa) * run_cycles, "systolic array");
    }
    sa.dynamic_j = dyn[size_t(Component::Sa)];

    ComponentEnergy& vu = lg.at(Component::Vu);
    fill_units(vu, vu_g, GateKind::Vu);
    vu.dynamic_j = dyn[size_t(Component::Vu)];
    check_conserved(vu, uint64_t(p.num_vu) * run_cycles, "vector unit");

    ComponentEnergy& hb = lg.at(Component::Hbm);
    fill_units(hb, hbm_g, GateKind::Hbm);
    hb.dynamic_j = dyn[size_t(Component::Hbm)];
    check_conserved(hb, run_cycles, "HBM interface");

    ComponentEnergy& ic = lg.at(Component::Ici);
    fill_units(ic, ici_g, GateKind::Ici);
    ic.dynamic_j = dyn[size_t(Component::Ici)];
    check_conserved(ic, run_cycles, "interconnect");

    ComponentEnergy& sr = lg.at(Component::Sram);
    {
      const SramGates::Totals& tt = sram.g.totals();
      sr.on_cycles = tt.on_cycles;
      sr.sleep_cycles = tt.sleep_cycles;
      sr.off_cycles = tt.off_cycles;
      sr.trans_cycles = tt.trans_cycles;
      sr.transitions = tt.sleep_episodes + tt.off_episodes;
      double w = instance_static_w(b, GateKind::SramSleep);
      sr.on_j = double(sr.on_cycles) * w / f;
      sr.sleep_j = double(sr.sleep_cycles) * (zero ? 0.0 : b.power.leak_sram_sleep) * w / f;
      sr.off_j = double(sr.off_cycles) * (zero ? 0.0 : b.power.leak_sram_off) * w / f;
      sr.trans_j = double(sr.trans_cycles) * w / f;
      sr.switching_j =
          zero ? 0.0
               : double(tt.sleep_episodes) * switching_energy(b, GateKind::SramSleep) +
                     double(tt.off_episodes) * switching_energy(b, GateKind::SramOff);
      sr.dynamic_j = dyn[size_t(Component::Sram)];
      check_conserved(sr, r.num_segments * run_cycles, "SRAM");
    }

    ComponentEnergy& un = lg.at(Component::Uncore);
    un.on_cycles = run_cycles;
    un.on_j = double(run_cycles) * b.power.uncore_static_w / f;
    un.dynamic_j = dyn[size_t(Component::Uncore)];
    check_conserved(un, run_cycles, "uncore");

    r.static_j = lg.static_j();
    r.dynamic_j = lg.dynamic_j();
    r.switching_j = lg.switching_j();
    r.total_j = lg.total_j();
    r.avg_power_w = r.seconds > 0 ? r.total_j / r.seconds : 0.0;

    if (run_cycles > 0) {
      double dsa = double(p.num_sa) * double(run_cycles);
      r.util.sa_temporal = double(sa_busy) / dsa;
      r.util.sa_spatial = double(macs) / (dsa * W * W);
      r.util.vu_temporal =
          p.num_vu ? double(vu_busy) / (double(p.num_vu) * run_cycles) : 0.0;
      r.util.hbm_temporal = double(hbm_busy) / double(run_cycles);
      r.util.ici_temporal = double(ici_busy) / double(run_cycles);
    }

    GateEventCounts& ge = r.gates;
    if (pe_level) {
      ge.episodes[size_t(GateKind::SaPe)] = pe_eps;
      ge.gated_cycles[size_t(GateKind::SaPe)] = sa.won_cycles + sa.off_cycles;
    } else {
      ge.episodes[size_t(GateKind::SaFull)] = sa.transitions;
      ge.gated_cycles[size_t(GateKind::SaFull)] = sa.off_cycles;
    }
    ge.episodes[size_t(GateKind::Vu)] = vu.transitions;
    ge.gated_cycles[size_t(GateKind::Vu)] = vu.off_cycles;
    ge.episodes[size_t(GateKind::Hbm)] = hb.transitions;
    ge.gated_cycles[size_t(GateKind::Hbm)] = hb.off_cycles;
    ge.episodes[size_t(GateKind::Ici)] = ic.transitions;
    ge.gated_cycles[size_t(GateKind::Ici)] = ic.off_cycles;
    const SramGates::Totals& tt = sram.g.totals();
    ge.episodes[size_t(GateKind::SramSleep)] = tt.sleep_episodes;
    ge.gated_cycles[size_t(GateKind::SramSleep)] = tt.sleep_cycles;
    ge.episodes[size_t(GateKind::SramOff)] = tt.off_episodes;
    ge.gated_cycles[size_t(GateKind::SramOff)] = tt.off_cycles;

    r.sram_off_events = sram.g.off_events();
    std::sort(r.sram_off_events.begin(), r.sram_off_events.end());

    r.plan_windows = std::move(wins);
    // Peak over plan windows: window dynamic rate plus the run-average
    // non-dynamic rate (static and switching are not tracked per window).
    double nd_rate = r.seconds > 0 ? (r.static_j + r.switching_j) / r.seconds : 0.0;
    r.peak_power_w = r.avg_power_w;
    for (PlanWindow& w : r.plan_windows) {
      uint64_t dur = w.eff_end > w.eff_begin ? w.eff_end - w.eff_begin : 0;
      double dur_s = double(dur) / f;
      w.power_w = dur_s > 0 ? w.dynamic_j / dur_s + nd_rate : nd_rate;
      if (w.power_w > r.peak_power_w) {
        r.peak_power_w = w.power_w;
        r.peak_plan_index = w.plan_index;
      }
    }

    if (opt.plans && opt.plans->size() == r.plan_windows.size()) {
      std::vector<uint64_t> durs(opt.plans->size(), 0);
      for (const PlanWindow& w : r.plan_windows)
        if (w.plan_index < durs.size())
          durs[w.plan_index] = w.eff_end > w.eff_begin ? w.eff_end - w.eff_begin : 0;
      r.sram_demand = sram_demand_histogram(*opt.plans, durs);
    } else if (opt.plans) {
      r.sram_demand = sram_demand_histogram(*opt.plans);
    }

    if (logging) {
      r.has_gate_logs = true;
      auto take = [&](UnitDriver& d) {
        d.log.spans = d.gate.spans();
        d.log.episodes = d.gate.episodes();
        r.gate_logs.push_back(std::move(d.log));
      };
      for (UnitDriver& d : sa_g) take(d);
      for (UnitDriver& d : vu_g) take(d);
      take(hbm_g[0]);
      take(ici_g[0]);
      r.sram_log.num_segments = r.num_segments;
      r.sram_log.segment_bytes = b.chip.sram_segment_bytes;
      r.sram_log.sleep_delay = delay(GateKind::SramSleep);
      r.sram_log.off_delay = delay(GateKind::SramOff);
      r.sram_log.sleep_threshold = threshold(GateKind::SramSleep);
      r.sram_log.sweep_enabled = pol != Policy::NoPG;
      r.sram_log.sweep_period = zero ? 1 : kSramSweepPeriod;
      r.sram_log.calls = std::move(sram.calls);
      r.sram_log.totals = sram.g.totals();
    }
    return r;
  }
};

}  // namespace

SimReport simulate(const Program& p, const ChipBundle& b, const SimOptions& opt) {
  validate(b);
  Replay r(p, b, opt);
  return r.run();
}

double off_coverage(const SimReport& r, double seg_fraction) {
  if (r.run_cycles == 0 || r.num_segments == 0) return 0.0;
  uint64_t need = uint64_t(std::ceil(seg_fraction * double(r.num_segments)));
  if (need == 0) return 1.0;
  std::vector<std::pair<uint64_t, int64_t>> ev = r.sram_off_events;
  std::sort(ev.begin(), ev.end());
  uint64_t prev = 0, covered = 0;
  int64_t count = 0;
  for (const auto& [cycle, delta] : ev) {
    if (cycle >= r.run_cycles) break;
    if (cycle > prev) {
      if (count >= int64_t(need)) covered += cycle - prev;
      prev = cycle;
    }
    count += delta;
  }
  if (count >= int64_t(need)) covered += r.run_cycles - prev;
  return double(covered) / double(r.run_cycles);
}

FleetEnergy duty_cycle_adjust(const SimReport& r, const ChipBundle& b) {
  double d = b.fleet.duty_cycle;
  if (!(d > 0.0) || d > 1.0)
    throw SimError("fleet: duty cycle must be in (0, 1], got " + format_double(d));
  const PowerParams& pw = b.power;
  double logic = pw.sa_static_w * b.chip.num_sa + pw.vu_static_w * b.chip.num_vu +
                 pw.hbm_static_w + pw.ici_static_w;
  double q = pw.uncore_static_w;
  switch (r.policy) {
    case Policy::NoPG: q += logic + pw.sram_static_w; break;
    case Policy::CompPG:
    case Policy::Hw:
      // Hardware alone parks SRAM in retention; contents are not provably dead.
      q += pw.leak_logic_off * logic + pw.leak_sram_sleep * pw.sram_static_w;
      break;
    case Policy::HwSw:
      // The instrumented runtime powers SRAM fully off between jobs.
      q += pw.leak_logic_off * logic + pw.leak_sram_off * pw.sram_static_w;
      break;
    case Policy::Ideal: break;
  }
  FleetEnergy fe;
  fe.busy_j = r.total_j;
  fe.busy_s = r.seconds;
  fe.idle_s = r.seconds * (1.0 - d) / d;
  fe.quiescent_w = q;
  fe.fleet_j = b.fleet.pue * (fe.busy_j + fe.idle_s * fe.quiescent_w);
  fe.fleet_kwh = fe.fleet_j / 3.6e6;
  return fe;
}

std::vector<PolicyComparison> compare_policies(const Program& p, const ChipBundle& b,
                                               const std::vector<Policy>& policies,
                                               const InstrumentOptions& iopt,
                                               const std::vector<TilePlan>* plans,
                                               std::vector<SimReport>* reports) {
  std::array<bool, kNumPolicies> have{};
  std::array<SimReport, kNumPolicies> reps;
  Program instrumented;
  bool have_instrumented = false;
  auto get = [&](Policy pol) -> const SimReport& {
    size_t i = size_t(pol);
    if (!have[i]) {
      SimOptions o;
      o.policy = pol;
      o.plans = plans;
      if (pol == Policy::HwSw) {
        if (!have_instrumented) {
          instrumented = instrument(p, b, iopt);
          have_instrumented = true;
        }
        reps[i] = simulate(instrumented, b, o);
      } else {
        reps[i] = simulate(p, b, o);
      }
      have[i] = true;
    }
    return reps[i];
  };

  const SimReport& base = get(Policy::NoPG);
  const SimReport& ideal = get(Policy::Ideal);
  FleetEnergy fbase = duty_cycle_adjust(base, b);
  FleetEnergy fideal = duty_cycle_adjust(ideal, b);

  std::vector<PolicyComparison> rows;
  rows.reserve(policies.size());
  for (Policy pol : policies) {
    const SimReport& r = get(pol);
    FleetEnergy fe = duty_cycle_adjust(r, b);
    PolicyComparison row;
    row.policy = pol;
    row.run_cycles = r.run_cycles;
    row.energy_j = r.total_j;
    row.fleet_kwh = fe.fleet_kwh;
    row.avg_power_w = r.avg_power_w;
    row.peak_power_w = r.peak_power_w;
    if (fbase.fleet_j > 0) {
      row.savings_pct = 100.0 * (1.0 - fe.fleet_j / fbase.fleet_j);
      row.gap_to_ideal_pp = 100.0 * (fe.fleet_j - fideal.fleet_j) / fbase.fleet_j;
    }
    if (base.run_cycles > 0)
      row.overhead_pct =
          100.0 * (double(r.run_cycles) / double(base.run_cycles) - 1.0);
    rows.push_back(row);
  }
  if (reports) {
    reports->clear();
    for (Policy pol : policies) reports->push_back(reps[size_t(pol)]);
  }
  return rows;
}

}  // namespace npupg
