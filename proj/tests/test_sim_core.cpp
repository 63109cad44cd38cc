#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "npupg/compiler_passes.hpp"
#include "npupg/sim_core.hpp"

using namespace npupg;

namespace {

ChipBundle small_bundle() {
  ChipBundle b = chip_preset("npu-d");
  b.chip.num_sa = 2;
  b.chip.num_vu = 2;
  b.chip.sram_bytes = 1ull << 20;  // 256 segments
  return b;
}

ModelSpec one_matmul(uint64_t m, uint64_t k, uint64_t n) {
  ModelSpec s;
  s.family = "synthetic";
  s.name = "mm";
  s.dtype_bytes = 2;
  Operator op;
  op.kind = OpKind::MatMul;
  op.label = "mm";
  op.m = m;
  op.k = k;
  op.n = n;
  op.dtype_bytes = 2;
  s.synthetic_ops.push_back(op);
  return s;
}

ModelSpec mixed_model() {
  ModelSpec s;
  s.family = "synthetic";
  s.name = "mixed";
  s.dtype_bytes = 2;
  Operator mm;
  mm.id = 0;
  mm.kind = OpKind::MatMul;
  mm.label = "mm0";
  mm.m = 512;
  mm.k = 256;
  mm.n = 256;
  s.synthetic_ops.push_back(mm);
  Operator ew;
  ew.id = 1;
  ew.kind = OpKind::Elementwise;
  ew.label = "act";
  ew.preds = {0};
  ew.elems = 512 * 256;
  s.synthetic_ops.push_back(ew);
  Operator cl;
  cl.id = 2;
  cl.kind = OpKind::Collective;
  cl.label = "ar";
  cl.preds = {1};
  cl.coll = CollectiveKind::AllReduce;
  cl.bytes = 512 * 256 * 2;
  cl.participants = 4;
  s.synthetic_ops.push_back(cl);
  Operator mm2;
  mm2.id = 3;
  mm2.kind = OpKind::MatMul;
  mm2.label = "mm1";
  mm2.preds = {2};
  mm2.m = 512;
  mm2.k = 256;
  mm2.n = 128;
  s.synthetic_ops.push_back(mm2);
  return s;
}

struct Built {
  Program prog;
  std::vector<TilePlan> plans;
};

Built build(const ModelSpec& spec, const ChipBundle& b) {
  Graph g = build_model_graph(spec);
  Built out;
  out.plans = tile_and_fuse(g, b.chip);
  out.prog = lower(g, out.plans, b.chip);
  return out;
}

SimReport run_policy(const Program& p, const ChipBundle& b, Policy pol,
                     bool logs = false) {
  SimOptions o;
  o.policy = pol;
  o.keep_gate_logs = logs;
  return simulate(p, b, o);
}

// Hand program: one vector op and the closing barrier.
Program tiny_vu_program(const ChipBundle& b, uint64_t elems) {
  Program p;
  p.chip_name = b.chip.name;
  p.num_sa = b.chip.num_sa;
  p.num_vu = b.chip.num_vu;
  p.sram_bytes = b.chip.sram_bytes;
  Instr v;
  v.kind = InstrKind::VuOp;
  v.issue_cycle = 0;
  v.unit = 0;
  v.cycles = 1;
  v.elems = elems;
  p.instrs.push_back(v);
  Instr bar;
  bar.kind = InstrKind::Barrier;
  bar.issue_cycle = 1;
  p.instrs.push_back(bar);
  p.static_cycles = 1;
  return p;
}

Instr make_setpm(uint64_t at, Component fu, uint32_t unit_mask, PolicyMode mode) {
  Instr s;
  s.kind = InstrKind::Setpm;
  s.issue_cycle = at;
  s.setpm.variant = SetpmSpec::Variant::FuImm;
  s.setpm.fu = fu;
  s.setpm.mode = mode;
  s.setpm.fu_mask = Bitmap::from_lsb0(unit_mask, 8);
  return s;
}

// ---------------------------------------------------------------------------
// Per-cycle reference models. These re-derive the controller semantics one
// cycle at a time from the recorded call logs; the interval controllers must
// produce identical mode-cycle totals and episode counts.

struct NaiveUnit {
  enum class St { On, TOff, Gated, TOn };
  uint32_t delay = 0, threshold = 0;
  PolicyMode pol = PolicyMode::Auto;
  St st = St::On;
  uint64_t t_end = 0;
  bool wake_pending = false;
  uint64_t idle_since = 0;
  uint64_t on = 0, gated = 0, trans = 0, eps = 0;

  void begin_wake(uint64_t c) {
    eps++;
    st = St::TOn;
    t_end = c + delay;
  }
  void settle(uint64_t c) {
    for (;;) {
      if (st == St::TOff && t_end <= c) {
        st = St::Gated;
        if (wake_pending) {
          wake_pending = false;
          begin_wake(t_end);
          continue;
        }
        continue;
      }
      if (st == St::TOn && t_end <= c) {
        st = St::On;
        idle_since = std::max(idle_since, t_end);
        if (pol == PolicyMode::Off || pol == PolicyMode::Sleep) {
          st = St::TOff;
          t_end = t_end + delay;
          continue;
        }
        continue;
      }
      break;
    }
  }
  void apply(const GateCall& gc, uint64_t c) {
    switch (gc.k) {
      case GateCall::K::Request:
        if (st == St::Gated) begin_wake(c);
        else if (st == St::TOff) wake_pending = true;
        break;
      case GateCall::K::Busy:
        REQUIRE(st == St::On);
        idle_since = std::max(idle_since, gc.b);
        break;
      case GateCall::K::SetPolicy: {
        PolicyMode prev = pol;
        pol = gc.mode;
        if (gc.mode == PolicyMode::On) {
          if (st == St::Gated) begin_wake(c);
          else if (st == St::TOff) wake_pending = true;
        } else if (gc.mode == PolicyMode::Off || gc.mode == PolicyMode::Sleep) {
          if (st == St::On) {
            st = St::TOff;
            t_end = c + delay;
          }
        } else if (gc.mode == PolicyMode::Auto) {
          if (prev == PolicyMode::Off || prev == PolicyMode::Sleep) {
            if (st == St::Gated) begin_wake(c);
            else if (st == St::TOff) wake_pending = true;
          }
        }
        break;
      }
      case GateCall::K::Finish: break;
    }
    settle(c);
  }
  void run(const UnitGateLog& lg, uint64_t run_cycles) {
    delay = lg.delay;
    threshold = lg.threshold;
    pol = lg.initial_policy;
    st = (pol == PolicyMode::Off || pol == PolicyMode::Sleep) ? St::Gated : St::On;
    size_t ci = 0;
    for (uint64_t c = 0; c < run_cycles; c++) {
      settle(c);
      while (ci < lg.calls.size() && lg.calls[ci].a <= c) apply(lg.calls[ci++], c);
      if (st == St::On && pol == PolicyMode::Auto && c >= idle_since + threshold) {
        st = St::TOff;
        t_end = c + delay;
      }
      switch (st) {
        case St::On: on++; break;
        case St::Gated: gated++; break;
        default: trans++; break;
      }
    }
  }
};

struct NaiveSram {
  struct Seg {
    PowerMode mode = PowerMode::On;
    PolicyMode pol = PolicyMode::Auto;
    uint64_t t1 = 0;  // transition end; cycles below it tally as transition
    uint64_t last_end = 0;
  };
  uint64_t seg_bytes = 0;
  uint32_t sleep_delay = 0, off_delay = 0, threshold = 0;
  bool sweep = false;
  uint64_t period = 1;
  std::vector<Seg> segs;
  uint64_t on = 0, sleep = 0, off = 0, trans = 0, eps_sleep = 0, eps_off = 0;

  uint64_t wake(Seg& s, uint64_t c) {
    if (s.mode == PowerMode::On) return std::max(c, s.t1);
    uint64_t at = std::max(c, s.t1);  // let an in-flight entry finish first
    uint32_t d = s.mode == PowerMode::Sleep ? sleep_delay : off_delay;
    if (s.mode == PowerMode::Off) eps_off++;
    else eps_sleep++;
    s.mode = PowerMode::On;
    s.t1 = at + d;
    return s.t1;
  }
  void gate(Seg& s, uint64_t c, PowerMode target) {
    uint64_t at = std::max(c, s.t1);
    if (s.mode == target) return;
    uint32_t d = target == PowerMode::Sleep ? sleep_delay : off_delay;
    s.mode = target;
    s.t1 = at + d;
  }
  void range(uint64_t a0, uint64_t a1, uint64_t* first, uint64_t* last) {
    *first = a0 / seg_bytes;
    *last = a1 == a0 ? *first : (a1 - 1) / seg_bytes + 1;
  }
  void apply(const SramCall& sc, uint64_t c) {
    uint64_t first = 0, last = 0;
    switch (sc.k) {
      case SramCall::K::Access: {
        range(sc.addr, sc.addr + sc.bytes, &first, &last);
        uint64_t ready = c;
        for (uint64_t i = first; i < last; i++) ready = std::max(ready, wake(segs[i], c));
        CHECK(ready == sc.result);
        break;
      }
      case SramCall::K::NoteBusy:
        range(sc.addr, sc.addr + sc.bytes, &first, &last);
        for (uint64_t i = first; i < last; i++) {
          REQUIRE(segs[i].mode == PowerMode::On);
          REQUIRE(segs[i].t1 <= c);
          segs[i].last_end = std::max(segs[i].last_end, sc.end);
        }
        break;
      case SramCall::K::SetRange: {
        range(sc.addr, sc.bytes, &first, &last);
        for (uint64_t i = first; i < last; i++) {
          Seg& s = segs[i];
          PolicyMode prev = s.pol;
          s.pol = sc.mode;
          if (sc.mode == PolicyMode::Auto) {
            if ((prev == PolicyMode::Off || prev == PolicyMode::Sleep) &&
                s.mode != PowerMode::On)
              wake(s, c);
          } else if (sc.mode == PolicyMode::On) {
            if (s.mode != PowerMode::On) wake(s, c);
          } else {
            gate(s, c,
                 sc.mode == PolicyMode::Sleep ? PowerMode::Sleep : PowerMode::Off);
          }
        }
        break;
      }
      case SramCall::K::Finish: break;
    }
  }
  void run(const SramGateLog& lg, uint64_t run_cycles) {
    seg_bytes = lg.segment_bytes;
    sleep_delay = lg.sleep_delay;
    off_delay = lg.off_delay;
    threshold = lg.sleep_threshold;
    sweep = lg.sweep_enabled;
    period = lg.sweep_period;
    segs.assign(lg.num_segments, Seg{});
    size_t ci = 0;
    for (uint64_t c = 0; c < run_cycles; c++) {
      while (ci < lg.calls.size() && lg.calls[ci].start <= c) apply(lg.calls[ci++], c);
      if (sweep && c % period == 0) {
        for (Seg& s : segs)
          if (s.mode == PowerMode::On && s.pol == PolicyMode::Auto && c >= s.t1 &&
              c >= s.last_end + threshold) {
            s.mode = PowerMode::Sleep;
            s.t1 = c + sleep_delay;
          }
      }
      for (const Seg& s : segs) {
        if (c < s.t1) {
          trans++;
        } else {
          switch (s.mode) {
            case PowerMode::On: on++; break;
            case PowerMode::Sleep: sleep++; break;
            case PowerMode::Off: off++; break;
          }
        }
      }
    }
  }
};

void check_logs_against_steppers(const SimReport& r) {
  REQUIRE(r.has_gate_logs);
  for (const UnitGateLog& lg : r.gate_logs) {
    CAPTURE(int(lg.kind));
    CAPTURE(lg.unit);
    NaiveUnit n;
    n.run(lg, r.run_cycles);
    uint64_t on = 0, gated = 0, trans = 0;
    for (const ModeSpan& s : lg.spans) {
      if (s.transition) trans += s.end - s.begin;
      else if (s.mode == PowerMode::On) on += s.end - s.begin;
      else gated += s.end - s.begin;
    }
    CHECK(n.on == on);
    CHECK(n.gated == gated);
    CHECK(n.trans == trans);
    CHECK(n.eps == lg.episodes);
  }
  NaiveSram ns;
  ns.run(r.sram_log, r.run_cycles);
  CHECK(ns.on == r.sram_log.totals.on_cycles);
  CHECK(ns.sleep == r.sram_log.totals.sleep_cycles);
  CHECK(ns.off == r.sram_log.totals.off_cycles);
  CHECK(ns.trans == r.sram_log.totals.trans_cycles);
  CHECK(ns.eps_sleep == r.sram_log.totals.sleep_episodes);
  CHECK(ns.eps_off == r.sram_log.totals.off_episodes);
}

void check_conservation(const SimReport& r, const ChipBundle& b) {
  uint64_t run = r.run_cycles;
  uint64_t W = b.chip.sa_width;
  bool pe = r.policy == Policy::Hw || r.policy == Policy::HwSw || r.policy == Policy::Ideal;
  uint64_t sa_units = pe ? uint64_t(b.chip.num_sa) * W * W : b.chip.num_sa;
  CHECK(r.ledger.at(Component::Sa).mode_cycles() == sa_units * run);
  CHECK(r.ledger.at(Component::Vu).mode_cycles() == uint64_t(b.chip.num_vu) * run);
  CHECK(r.ledger.at(Component::Sram).mode_cycles() == b.chip.num_segments() * run);
  CHECK(r.ledger.at(Component::Hbm).mode_cycles() == run);
  CHECK(r.ledger.at(Component::Ici).mode_cycles() == run);
  CHECK(r.ledger.at(Component::Uncore).mode_cycles() == run);
  CHECK(r.total_j ==
        doctest::Approx(r.static_j + r.dynamic_j + r.switching_j).epsilon(1e-12));
  CHECK(r.stalls.dma_edge + r.stalls.barrier_drain == run - r.static_cycles);
}

}  // namespace

TEST_CASE("ungated and ideal replays reproduce the static schedule") {
  ChipBundle b = small_bundle();
  Built w = build(one_matmul(256, 256, 128), b);
  for (Policy pol : {Policy::NoPG, Policy::Ideal}) {
    CAPTURE(policy_name(pol));
    SimReport r = run_policy(w.prog, b, pol);
    CHECK(r.run_cycles == w.prog.static_cycles);
    CHECK(r.stalls.stream_total() == 0);
    CHECK(r.stalls.sa_wake == 0);
    CHECK(r.stalls.vu_wake == 0);
    check_conservation(r, b);
  }
}

TEST_CASE("interval controllers match per-cycle stepping over real runs") {
  ChipBundle b = small_bundle();
  Built w = build(one_matmul(256, 256, 128), b);
  for (Policy pol : {Policy::CompPG, Policy::Hw}) {
    CAPTURE(policy_name(pol));
    SimReport r = run_policy(w.prog, b, pol, true);
    check_logs_against_steppers(r);
    check_conservation(r, b);
  }
}

TEST_CASE("per-cycle stepping also covers instrumented programs") {
  ChipBundle b = small_bundle();
  b.power.bet_cycles[size_t(GateKind::Vu)] = 10;  // let the 14-cycle gaps qualify
  Built w = build(one_matmul(256, 256, 128), b);
  InstrumentStats st;
  Program ip = instrument(w.prog, b, {1.0, true, true}, &st);
  REQUIRE(st.instrumented > 0);
  SimReport r = run_policy(ip, b, Policy::HwSw, true);
  CHECK(r.setpm_count == st.setpm_count);
  check_logs_against_steppers(r);
  check_conservation(r, b);
}

TEST_CASE("policy ladder orders energy on a mixed workload") {
  ChipBundle b = small_bundle();
  Built w = build(mixed_model(), b);
  std::vector<Policy> ladder = {Policy::NoPG, Policy::CompPG, Policy::Hw, Policy::HwSw,
                                Policy::Ideal};
  std::vector<PolicyComparison> rows = compare_policies(w.prog, b, ladder);
  REQUIRE(rows.size() == 5);
  for (size_t i = 0; i < 5; i++) CHECK(rows[i].policy == ladder[i]);
  for (size_t i = 1; i < 5; i++) {
    CAPTURE(i);
    CHECK(rows[i].energy_j <= rows[i - 1].energy_j * (1.0 + 1e-9));
    CHECK(rows[i].fleet_kwh <= rows[i - 1].fleet_kwh * (1.0 + 1e-9));
  }
  CHECK(rows[0].savings_pct == doctest::Approx(0.0));
  CHECK(rows[0].overhead_pct == doctest::Approx(0.0));
  for (const PolicyComparison& row : rows) {
    CHECK(row.gap_to_ideal_pp >= -1e-9);
    CHECK(row.overhead_pct >= -1e-9);
    CHECK(row.overhead_pct < 5.0);
  }
}

TEST_CASE("software commands beat the bare detectors when windows qualify") {
  ChipBundle b = small_bundle();
  b.power.bet_cycles[size_t(GateKind::Vu)] = 10;
  Built w = build(one_matmul(256, 256, 128), b);
  std::vector<PolicyComparison> rows =
      compare_policies(w.prog, b, {Policy::Hw, Policy::HwSw}, {1.0, true, true});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].energy_j < rows[0].energy_j);
  CHECK(rows[1].run_cycles <= rows[0].run_cycles);
  SimReport hwsw = run_policy(instrument(w.prog, b, {1.0, true, true}), b, Policy::HwSw);
  CHECK(hwsw.setpm_per_1000 < 1000.0 * 0.5);
  CHECK(hwsw.setpm_count > 0);
}

TEST_CASE("single vector op bills exactly the hand-computed joules") {
  ChipBundle b = chip_preset("npu-a");
  Program p = tiny_vu_program(b, 128);
  double f = b.chip.frequency_hz;
  const PowerParams& pw = b.power;

  SimReport r = run_policy(p, b, Policy::NoPG);
  CHECK(r.run_cycles == 1);
  double static_w = pw.sa_static_w * b.chip.num_sa + pw.vu_static_w * b.chip.num_vu +
                    pw.sram_static_w + pw.hbm_static_w + pw.ici_static_w +
                    pw.uncore_static_w;
  double dyn = 2 * pw.instr_issue_j + 128 * pw.vu_lane_op_j;
  CHECK(r.total_j == doctest::Approx(static_w / f + dyn).epsilon(1e-12));
  CHECK(r.ledger.at(Component::Vu).on_cycles == b.chip.num_vu);
  check_conservation(r, b);

  SimReport ri = run_policy(p, b, Policy::Ideal);
  CHECK(ri.run_cycles == 1);
  // Perfect gating keeps only the uncore and the single busy vector-unit
  // cycle powered; every idle structure costs nothing.
  CHECK(ri.total_j ==
        doctest::Approx((pw.uncore_static_w + pw.vu_static_w) / f + dyn).epsilon(1e-12));
  CHECK(ri.ledger.at(Component::Vu).on_cycles == 1);
  check_conservation(ri, b);
}

TEST_CASE("an empty program reports zero cycles and zero energy") {
  ChipBundle b = chip_preset("npu-a");
  Program p;
  p.chip_name = b.chip.name;
  p.num_sa = b.chip.num_sa;
  p.num_vu = b.chip.num_vu;
  p.sram_bytes = b.chip.sram_bytes;
  SimReport r = run_policy(p, b, Policy::Hw);
  CHECK(r.run_cycles == 0);
  CHECK(r.total_j == 0.0);
  CHECK(r.avg_power_w == 0.0);
  CHECK(r.seconds == 0.0);
}

TEST_CASE("work issued to a pinned-off unit is a program error") {
  ChipBundle b = chip_preset("npu-a");
  Program p;
  p.chip_name = b.chip.name;
  p.num_sa = b.chip.num_sa;
  p.num_vu = b.chip.num_vu;
  p.sram_bytes = b.chip.sram_bytes;
  p.instrs.push_back(make_setpm(0, Component::Vu, 0b1, PolicyMode::Off));
  Instr v;
  v.kind = InstrKind::VuOp;
  v.issue_cycle = 5;
  v.unit = 0;
  v.cycles = 1;
  p.instrs.push_back(v);
  Instr bar;
  bar.kind = InstrKind::Barrier;
  bar.issue_cycle = 6;
  p.instrs.push_back(bar);
  p.static_cycles = 6;

  CHECK_THROWS_AS(run_policy(p, b, Policy::Hw), SimError);
  // The ungated baseline ignores power commands and runs the stream as is.
  SimReport r = run_policy(p, b, Policy::NoPG);
  CHECK(r.run_cycles == 6);
  CHECK(r.setpm_count == 1);

  Program ps = p;
  ps.instrs[0].setpm.variant = SetpmSpec::Variant::SramRange;
  ps.instrs[0].setpm.sram_start = 0;
  ps.instrs[0].setpm.sram_end = 4096;
  ps.instrs[1].sram.push_back({0, 64, false});
  CHECK_THROWS_AS(run_policy(ps, b, Policy::Hw), SimError);
}

TEST_CASE("an auto command wakes a pinned unit and re-arms its detector") {
  ChipBundle b = chip_preset("npu-a");
  Program p;
  p.chip_name = b.chip.name;
  p.num_sa = b.chip.num_sa;
  p.num_vu = b.chip.num_vu;
  p.sram_bytes = b.chip.sram_bytes;
  p.instrs.push_back(make_setpm(0, Component::Vu, 0b1, PolicyMode::Off));
  p.instrs.push_back(make_setpm(100, Component::Vu, 0b1, PolicyMode::Auto));
  Instr v;
  v.kind = InstrKind::VuOp;
  v.issue_cycle = 200;
  v.unit = 0;
  v.cycles = 10;
  p.instrs.push_back(v);
  Instr bar;
  bar.kind = InstrKind::Barrier;
  bar.issue_cycle = 210;
  p.instrs.push_back(bar);
  p.static_cycles = 210;

  SimReport r = run_policy(p, b, Policy::Hw, true);
  // Wake at 100, detector re-gates after the idle threshold, demand wake at
  // 200 stalls the op by one transition; the closing barrier absorbs it.
  uint32_t d = b.power.delay_cycles[size_t(GateKind::Vu)];
  CHECK(r.run_cycles == 210 + d);
  CHECK(r.stalls.vu_wake == d);
  CHECK(r.stalls.barrier_drain == d);
  CHECK(r.stalls.dma_edge == 0);
  const UnitGateLog* vu0 = nullptr;
  for (const UnitGateLog& lg : r.gate_logs)
    if (lg.kind == GateKind::Vu && lg.unit == 0) vu0 = &lg;
  REQUIRE(vu0 != nullptr);
  CHECK(vu0->episodes == 2);
  check_logs_against_steppers(r);
  check_conservation(r, b);
}

TEST_CASE("off coverage integrates the segment power-off timeline") {
  SimReport r;
  r.run_cycles = 100;
  r.num_segments = 10;
  r.sram_off_events = {{0, +8}, {50, -1}};
  CHECK(off_coverage(r, 0.7) == doctest::Approx(1.0));
  CHECK(off_coverage(r, 0.8) == doctest::Approx(0.5));
  CHECK(off_coverage(r, 0.9) == doctest::Approx(0.0));
  CHECK(off_coverage(r, 0.0) == doctest::Approx(1.0));
  SimReport empty;
  CHECK(off_coverage(empty, 0.5) == 0.0);
}

TEST_CASE("fleet scaling applies duty cycle, policy floor, and PUE") {
  ChipBundle b = chip_preset("npu-a");
  b.fleet.duty_cycle = 0.60;
  b.fleet.pue = 1.1;
  const PowerParams& pw = b.power;
  SimReport r;
  r.total_j = 10.0;
  r.seconds = 2.0;

  r.policy = Policy::NoPG;
  FleetEnergy fe = duty_cycle_adjust(r, b);
  double full = pw.uncore_static_w + pw.sa_static_w * b.chip.num_sa +
                pw.vu_static_w * b.chip.num_vu + pw.sram_static_w + pw.hbm_static_w +
                pw.ici_static_w;
  double idle_s = 2.0 * (1.0 - 0.6) / 0.6;
  CHECK(fe.idle_s == doctest::Approx(idle_s).epsilon(1e-12));
  CHECK(fe.quiescent_w == doctest::Approx(full).epsilon(1e-12));
  CHECK(fe.fleet_j == doctest::Approx(1.1 * (10.0 + idle_s * full)).epsilon(1e-12));

  r.policy = Policy::HwSw;
  FleetEnergy fh = duty_cycle_adjust(r, b);
  double logic = pw.sa_static_w * b.chip.num_sa + pw.vu_static_w * b.chip.num_vu +
                 pw.hbm_static_w + pw.ici_static_w;
  double floor_w =
      pw.uncore_static_w + pw.leak_logic_off * logic + pw.leak_sram_off * pw.sram_static_w;
  CHECK(fh.quiescent_w == doctest::Approx(floor_w).epsilon(1e-12));
  CHECK(fh.fleet_j < fe.fleet_j);

  r.policy = Policy::Ideal;
  CHECK(duty_cycle_adjust(r, b).quiescent_w ==
        doctest::Approx(pw.uncore_static_w).epsilon(1e-12));

  ChipBundle bad = b;
  bad.fleet.duty_cycle = 0.0;
  CHECK_THROWS_AS(duty_cycle_adjust(r, bad), SimError);
}

TEST_CASE("plan windows partition the run and carry the dynamic energy") {
  ChipBundle b = small_bundle();
  Built w = build(mixed_model(), b);
  SimOptions o;
  o.policy = Policy::Hw;
  o.plans = &w.plans;
  SimReport r = simulate(w.prog, b, o);
  REQUIRE(r.plan_windows.size() == w.prog.plan_spans.size());
  double dyn = 0;
  uint64_t prev = 0;
  for (const PlanWindow& win : r.plan_windows) {
    CHECK(win.eff_begin == prev);
    CHECK(win.eff_end >= win.eff_begin);
    prev = win.eff_end;
    dyn += win.dynamic_j;
    CHECK(win.power_w > 0.0);
  }
  CHECK(prev == r.run_cycles);
  CHECK(dyn == doctest::Approx(r.dynamic_j).epsilon(1e-9));
  CHECK(r.peak_power_w >= r.avg_power_w);
  REQUIRE(!r.sram_demand.empty());
  double tf = 0;
  for (const DemandBin& bin : r.sram_demand) tf += bin.time_fraction;
  CHECK(tf == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.util.sa_spatial <= r.util.sa_temporal);
  CHECK(r.util.sa_temporal <= 1.0);
  CHECK(r.util.vu_temporal <= 1.0);
  CHECK(r.util.hbm_temporal <= 1.0);
}

TEST_CASE("replays are deterministic") {
  ChipBundle b = small_bundle();
  Built w1 = build(mixed_model(), b);
  Built w2 = build(mixed_model(), b);
  SimReport a = run_policy(w1.prog, b, Policy::HwSw);
  SimReport c = run_policy(w2.prog, b, Policy::HwSw);
  CHECK(a.run_cycles == c.run_cycles);
  CHECK(a.total_j == c.total_j);
  CHECK(a.static_j == c.static_j);
  CHECK(a.dynamic_j == c.dynamic_j);
  CHECK(a.switching_j == c.switching_j);
  CHECK(a.peak_power_w == c.peak_power_w);
  CHECK(a.setpm_count == c.setpm_count);
  CHECK(a.sram_off_events == c.sram_off_events);
}

TEST_CASE("shape mismatches and unresolved register operands are rejected") {
  ChipBundle b = chip_preset("npu-a");
  ChipBundle other = chip_preset("npu-d");
  Program p = tiny_vu_program(b, 8);
  CHECK_THROWS_AS(run_policy(p, other, Policy::NoPG), SimError);

  Program pr = tiny_vu_program(b, 8);
  Instr s;
  s.kind = InstrKind::Setpm;
  s.issue_cycle = 0;
  s.setpm.variant = SetpmSpec::Variant::FuReg;
  s.setpm.fu = Component::Vu;
  s.setpm.reg = 3;
  pr.instrs.insert(pr.instrs.begin(), s);
  CHECK_THROWS_AS(run_policy(pr, b, Policy::Hw), SimError);
  CHECK(run_policy(pr, b, Policy::NoPG).run_cycles == 1);
}
