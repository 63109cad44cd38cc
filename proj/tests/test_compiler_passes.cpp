#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "npupg/compiler_passes.hpp"
#include "npupg/program_ir.hpp"

using namespace npupg;

namespace {

ChipBundle small_bundle(uint32_t num_sa, uint32_t num_vu) {
  ChipBundle b = chip_preset("npu-d");
  b.chip.num_sa = num_sa;
  b.chip.num_vu = num_vu;
  return b;
}

Program lower_model(const ModelSpec& spec, const ChipConfig& chip) {
  Graph g = build_model_graph(spec);
  auto plans = tile_and_fuse(g, chip);
  return lower(g, plans, chip);
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

// Two arrays, two vector units, one 256x256x128 matmul: the alternating
// accumulation bursts leave a 14-cycle gap before each next burst on a unit.
Program burst_pattern_program(ChipBundle* bundle_out = nullptr) {
  ChipBundle b = small_bundle(2, 2);
  if (bundle_out) *bundle_out = b;
  return lower_model(one_matmul(256, 256, 128), b.chip);
}

std::vector<const Instr*> vu_setpms(const Program& p) {
  std::vector<const Instr*> out;
  for (const Instr& i : p.instrs)
    if (i.kind == InstrKind::Setpm && i.setpm.variant != SetpmSpec::Variant::SramRange &&
        i.setpm.fu == Component::Vu)
      out.push_back(&i);
  return out;
}

std::vector<const Instr*> sram_setpms(const Program& p) {
  std::vector<const Instr*> out;
  for (const Instr& i : p.instrs)
    if (i.kind == InstrKind::Setpm && i.setpm.variant == SetpmSpec::Variant::SramRange)
      out.push_back(&i);
  return out;
}

}  // namespace

TEST_CASE("vector-unit idleness covers leads, gaps, and tails") {
  Program p = burst_pattern_program();
  auto ivs = analyze_vu_idleness(p);
  // 16 bursts per unit: one lead, 15 inter-burst gaps, one tail.
  CHECK(ivs.size() == 34);
  size_t gaps14 = 0, leads = 0, tails = 0;
  for (const IdleInterval& iv : ivs) {
    CHECK(iv.kind == GateKind::Vu);
    CHECK(iv.end > iv.begin);
    if (iv.begin == 0) leads++;
    if (iv.open_ended) {
      tails++;
      CHECK(iv.end == p.static_cycles);
    }
    if (iv.length() == 14) gaps14++;
  }
  CHECK(leads == 2);
  CHECK(tails == 2);
  CHECK(gaps14 == 30);
}

TEST_CASE("inter-burst gaps gate only when past the break-even time") {
  ChipBundle b;
  Program p = burst_pattern_program(&b);

  // burst windows per unit, to tell gap commands from lead/tail commands
  uint64_t first_end[2] = {0, 0}, last_start[2] = {0, 0};
  for (const Instr& i : p.instrs)
    if (i.kind == InstrKind::VuOp) {
      if (first_end[i.unit] == 0) first_end[i.unit] = i.issue_cycle + i.cycles;
      last_start[i.unit] = i.issue_cycle;
    }

  InstrumentOptions all;
  all.budget_fraction = 1.0;
  all.gate_sram = false;

  // Default break-even (32) exceeds the 14-cycle gaps: nothing inside them.
  InstrumentStats st{};
  Program q = instrument(p, b, all, &st);
  for (const Instr* s : vu_setpms(q))
    for (int u = 0; u < 2; u++)
      if (s->setpm.fu_mask.get(u))
        CHECK(!(s->issue_cycle > first_end[u] && s->issue_cycle < last_start[u]));

  // Lowered break-even (10 < 14): every gap gets an off command at its start
  // and a wake two cycles (the transition delay) before its end.
  ChipBundle lowbet = b;
  lowbet.power.bet_cycles[size_t(GateKind::Vu)] = 10;
  InstrumentStats st2{};
  Program q2 = instrument(p, lowbet, all, &st2);
  CHECK(st2.instrumented == 34);
  // 30 gap pairs + 2 lead pairs + 2 tail offs, the two cycle-0 lead offs
  // folded into one immediate
  CHECK(st2.setpm_count == 65);

  auto dists = vu_slot_distances(p);
  uint64_t prev_end = 0;
  size_t bracketed = 0;
  for (const Instr& i : q2.instrs) {
    if (i.kind == InstrKind::VuOp && i.unit == 0) {
      if (prev_end != 0 && i.issue_cycle - prev_end == 14) {
        bool off_at_start = false, on_ahead = false;
        for (const Instr* s : vu_setpms(q2)) {
          if (!s->setpm.fu_mask.get(0)) continue;
          if (s->issue_cycle == prev_end && s->setpm.mode == PolicyMode::Off)
            off_at_start = true;
          if (s->issue_cycle == i.issue_cycle - 2 && s->setpm.mode == PolicyMode::Auto)
            on_ahead = true;
        }
        CHECK(off_at_start);
        CHECK(on_ahead);
        bracketed++;
      }
      prev_end = i.issue_cycle + i.cycles;
    }
  }
  CHECK(bracketed == 15);
  CHECK(dists[0].size() == 15);
}

TEST_CASE("sram windows classify by what closes them") {
  ChipBundle b = chip_preset("npu-d");
  Program p;
  p.chip_name = "npu-d";
  p.num_sa = b.chip.num_sa;
  p.num_vu = b.chip.num_vu;
  p.sram_bytes = b.chip.sram_bytes;
  uint64_t nseg = b.chip.num_segments();

  Instr d1;
  d1.kind = InstrKind::DmaIn;
  d1.issue_cycle = 0;
  d1.cycles = 10;
  d1.dma_id = 1;
  d1.bytes = 4096;
  d1.sram.push_back({0, 4096, true});
  Instr r1;
  r1.kind = InstrKind::VuOp;
  r1.issue_cycle = 5000;
  r1.cycles = 10;
  r1.elems = 1024;
  r1.sram.push_back({0, 4096, false});
  Instr d2;
  d2.kind = InstrKind::DmaIn;
  d2.issue_cycle = 9000;
  d2.cycles = 10;
  d2.dma_id = 2;
  d2.bytes = 4096;
  d2.sram.push_back({0, 4096, true});
  p.instrs = {d1, r1, d2};
  p.static_cycles = 20000;
  validate_program(p);

  auto ivs = analyze_sram_idleness(p, b);
  REQUIRE(ivs.size() == 4);
  // sorted by start cycle: the untouched segments merge into one rectangle,
  // then segment 0's retention window up to the read, its dead window up to
  // the write, and its open dead window at the end
  CHECK(ivs[0].kind == GateKind::SramOff);
  CHECK(ivs[0].begin == 0);
  CHECK(ivs[0].seg_begin == 1);
  CHECK(ivs[0].seg_end == nseg);
  CHECK(ivs[0].open_ended);
  CHECK(ivs[1].kind == GateKind::SramSleep);
  CHECK(ivs[1].begin == 10);
  CHECK(ivs[1].end == 5000);
  CHECK(ivs[1].width() == 1);
  CHECK(ivs[2].kind == GateKind::SramOff);
  CHECK(ivs[2].begin == 5010);
  CHECK(ivs[2].end == 9000);
  CHECK(ivs[3].begin == 9010);
  CHECK(ivs[3].open_ended);

  InstrumentOptions opt;
  opt.budget_fraction = 10.0;  // unbounded for this tiny stream
  opt.gate_vu = false;
  InstrumentStats st{};
  Program q = instrument(p, b, opt, &st);
  CHECK(st.instrumented == 3);  // retention window left to the sweeper
  CHECK(st.setpm_count == 4);   // untouched rect, dead pair, trailing off
  auto cmds = sram_setpms(q);
  REQUIRE(cmds.size() == 4);
  bool rect = false, dead_off = false, dead_on = false, trail = false;
  for (const Instr* s : cmds) {
    const SetpmSpec& sp = s->setpm;
    if (s->issue_cycle == 0 && sp.mode == PolicyMode::Off && sp.sram_start == 4096 &&
        sp.sram_end == nseg * 4096)
      rect = true;
    if (s->issue_cycle == 5010 && sp.mode == PolicyMode::Off && sp.sram_start == 0 &&
        sp.sram_end == 4096)
      dead_off = true;
    if (s->issue_cycle == 9000 - 10 && sp.mode == PolicyMode::Auto && sp.sram_start == 0)
      dead_on = true;
    if (s->issue_cycle == 9010 && sp.mode == PolicyMode::Off && sp.sram_start == 0)
      trail = true;
  }
  CHECK(rect);
  CHECK(dead_off);
  CHECK(dead_on);
  CHECK(trail);
  validate_program(q);
}

TEST_CASE("same-cycle unit commands fold into one immediate") {
  ChipBundle b = small_bundle(2, 2);
  Program p;
  p.chip_name = "npu-d";
  p.num_sa = 2;
  p.num_vu = 2;
  p.sram_bytes = b.chip.sram_bytes;
  for (uint32_t u = 0; u < 2; u++) {
    Instr a;
    a.kind = InstrKind::VuOp;
    a.issue_cycle = 100;
    a.cycles = 10;
    a.unit = u;
    a.elems = 1024;
    Instr c;
    c.kind = InstrKind::VuOp;
    c.issue_cycle = 500;
    c.cycles = 10;
    c.unit = u;
    c.elems = 1024;
    p.instrs.push_back(a);
    p.instrs.push_back(c);
  }
  std::stable_sort(p.instrs.begin(), p.instrs.end(),
                   [](const Instr& x, const Instr& y) { return x.issue_cycle < y.issue_cycle; });
  p.static_cycles = 2000;
  validate_program(p);

  InstrumentOptions opt;
  opt.budget_fraction = 10.0;  // unbounded for this tiny stream
  opt.gate_sram = false;
  InstrumentStats st{};
  Program q = instrument(p, b, opt, &st);
  // both units share identical windows: lead pair, gap pair, trailing off,
  // each folded across units
  CHECK(st.instrumented == 6);
  CHECK(st.setpm_count == 5);
  for (const Instr* s : vu_setpms(q)) {
    CHECK(s->setpm.fu_mask.get(0));
    CHECK(s->setpm.fu_mask.get(1));
  }
}

TEST_CASE("the budget takes the most valuable windows first") {
  ChipBundle b;
  Program p = burst_pattern_program(&b);
  ChipBundle lowbet = b;
  lowbet.power.bet_cycles[size_t(GateKind::Vu)] = 10;

  InstrumentOptions opt;  // default 3% budget
  opt.gate_sram = false;
  InstrumentStats st{};
  Program q = instrument(p, lowbet, opt, &st);
  uint64_t budget = uint64_t(double(p.instrs.size()) * 0.03);
  CHECK(st.setpm_count <= budget);
  CHECK(st.skipped_budget > 0);
  CHECK(st.setpm_rate() < 0.031);

  // the single most valuable window is always bracketed
  auto ivs = analyze_vu_idleness(p);
  const IdleInterval* best = nullptr;
  for (const IdleInterval& iv : ivs)
    if (!best || iv.length() > best->length()) best = &iv;
  REQUIRE(best != nullptr);
  bool best_taken = false;
  for (const Instr* s : vu_setpms(q))
    if (s->setpm.mode == PolicyMode::Off && s->issue_cycle == best->begin &&
        s->setpm.fu_mask.get(best->unit))
      best_taken = true;
  CHECK(best_taken);
  // and the 14-cycle gaps, the least valuable qualifiers, never are
  for (const Instr* s : vu_setpms(q))
    for (const IdleInterval& iv : ivs)
      if (iv.length() == 14 && s->setpm.mode == PolicyMode::Off)
        CHECK(s->issue_cycle != iv.begin);
}

TEST_CASE("full model programs stay under the command-rate bound") {
  ChipBundle b = chip_preset("npu-d");
  for (const char* name : {"llm-prefill", "dlrm-infer"}) {
    ModelSpec spec = model_preset(name);
    Program p = lower_model(spec, b.chip);
    InstrumentStats st{};
    Program q = instrument(p, b, InstrumentOptions{}, &st);
    CAPTURE(name);
    CHECK(st.instrumented > 0);
    CHECK(st.setpm_rate() < 0.031);
    CHECK(q.instrs.size() == p.instrs.size() + st.setpm_count);
    validate_program(q);
  }
}

TEST_CASE("instrumentation is deterministic") {
  ChipBundle b;
  Program p = burst_pattern_program(&b);
  InstrumentOptions opt;
  opt.budget_fraction = 1.0;
  Program a = instrument(p, b, opt);
  Program c = instrument(p, b, opt);
  CHECK(dump_program(a) == dump_program(c));
}
