#include "npupg/compiler_passes.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "npupg/util.hpp"

namespace npupg {

std::vector<IdleInterval> analyze_vu_idleness(const Program& p) {
  std::vector<std::vector<const Instr*>> per(p.num_vu);
  for (const Instr& i : p.instrs)
    if (i.kind == InstrKind::VuOp) per.at(i.unit).push_back(&i);

  std::vector<IdleInterval> out;
  for (uint32_t u = 0; u < p.num_vu; u++) {
    uint64_t prev_end = 0;
    for (const Instr* op : per[u]) {
      if (op->issue_cycle > prev_end) {
        IdleInterval iv;
        iv.kind = GateKind::Vu;
        iv.unit = u;
        iv.begin = prev_end;
        iv.end = op->issue_cycle;
        iv.ends_at_runtime_barrier = op->waits_on_dma;
        out.push_back(iv);
      }
      prev_end = std::max(prev_end, op->issue_cycle + op->cycles);
    }
    if (p.static_cycles > prev_end) {
      IdleInterval iv;
      iv.kind = GateKind::Vu;
      iv.unit = u;
      iv.begin = prev_end;
      iv.end = p.static_cycles;
      iv.open_ended = true;
      out.push_back(iv);
    }
  }
  return out;
}

std::vector<IdleInterval> analyze_sram_idleness(const Program& p, const ChipBundle& b) {
  if (p.sram_bytes != b.chip.sram_bytes)
    throw SimError("sram idleness: program was lowered for a different chip");
  const uint64_t seg_bytes = b.chip.sram_segment_bytes;
  const uint64_t nseg = b.chip.num_segments();

  struct SegEvent {
    uint64_t start, end;
    bool write;
  };
  std::vector<std::vector<SegEvent>> timeline(nseg);
  for (const Instr& in : p.instrs) {
    for (const SramTouch& t : in.sram) {
      if (t.bytes == 0) continue;
      uint64_t first = t.addr / seg_bytes;
      uint64_t last = (t.addr + t.bytes - 1) / seg_bytes;
      uint64_t end = in.issue_cycle + std::max<uint64_t>(in.cycles, 1);
      for (uint64_t s = first; s <= last; s++)
        timeline[s].push_back({in.issue_cycle, end, t.write});
    }
  }

  // (begin, end, kind, segment), sorted so adjacent segments with identical
  // windows sit next to each other and merge into one rectangle.
  std::vector<std::tuple<uint64_t, uint64_t, uint8_t, uint64_t>> flat;
  for (uint64_t s = 0; s < nseg; s++) {
    uint64_t cur = 0;
    for (const SegEvent& e : timeline[s]) {
      if (e.start > cur) {
        GateKind k = e.write ? GateKind::SramOff : GateKind::SramSleep;
        flat.emplace_back(cur, e.start, uint8_t(k), s);
      }
      cur = std::max(cur, e.end);
    }
    if (p.static_cycles > cur)
      flat.emplace_back(cur, p.static_cycles, uint8_t(GateKind::SramOff), s);
  }
  std::sort(flat.begin(), flat.end());

  std::vector<IdleInterval> out;
  for (const auto& [a, e, k, s] : flat) {
    if (!out.empty()) {
      IdleInterval& last = out.back();
      if (last.begin == a && last.end == e && last.kind == GateKind(k) &&
          last.seg_end == s) {
        last.seg_end = s + 1;
        continue;
      }
    }
    IdleInterval iv;
    iv.kind = GateKind(k);
    iv.seg_begin = s;
    iv.seg_end = s + 1;
    iv.begin = a;
    iv.end = e;
    iv.open_ended = (e == p.static_cycles);
    out.push_back(iv);
  }
  return out;
}

namespace {

struct Emit {
  uint64_t cycle;
  SetpmSpec spec;
};

bool score_order(const std::pair<double, IdleInterval>& x,
                 const std::pair<double, IdleInterval>& y) {
  if (x.first != y.first) return x.first > y.first;
  const IdleInterval &a = x.second, &b = y.second;
  if (a.begin != b.begin) return a.begin < b.begin;
  if (a.kind != b.kind) return uint8_t(a.kind) < uint8_t(b.kind);
  if (a.unit != b.unit) return a.unit < b.unit;
  if (a.seg_begin != b.seg_begin) return a.seg_begin < b.seg_begin;
  return a.end < b.end;
}

}  // namespace

Program instrument(const Program& p, const ChipBundle& b, const InstrumentOptions& opt,
                   InstrumentStats* stats) {
  InstrumentStats st;
  st.base_instrs = p.instrs.size();

  std::vector<IdleInterval> cand;
  if (opt.gate_vu) {
    auto vu = analyze_vu_idleness(p);
    cand.insert(cand.end(), vu.begin(), vu.end());
  }
  if (opt.gate_sram) {
    // Retention-class windows stay with the hardware sweeper; software adds
    // value where it knows the contents are dead.
    for (const IdleInterval& iv : analyze_sram_idleness(p, b))
      if (iv.kind == GateKind::SramOff) cand.push_back(iv);
  }

  std::vector<std::pair<double, IdleInterval>> scored;
  for (const IdleInterval& iv : cand) {
    size_t ki = size_t(iv.kind);
    uint64_t bet = b.power.bet_cycles[ki];
    uint64_t d = b.power.delay_cycles[ki];
    if (iv.length() <= bet || iv.length() <= 2 * d) continue;
    double save_w = instance_static_w(b, iv.kind) *
                    (1.0 - b.power.gated_ratio(iv.kind)) * double(iv.width());
    scored.push_back({save_w * double(iv.length() - bet), iv});
  }
  st.candidates = scored.size();
  std::sort(scored.begin(), scored.end(), score_order);

  uint64_t budget = uint64_t(double(st.base_instrs) * opt.budget_fraction);
  std::vector<Emit> emits;
  uint64_t used = 0;
  for (const auto& [score, iv] : scored) {
    (void)score;
    uint64_t cost = iv.open_ended ? 1 : 2;
    if (used + cost > budget) {
      st.skipped_budget++;
      continue;
    }
    used += cost;
    st.instrumented++;
    uint32_t d = b.power.delay_cycles[size_t(iv.kind)];
    SetpmSpec off;
    off.mode = PolicyMode::Off;
    if (iv.kind == GateKind::Vu) {
      if (iv.unit >= 8) throw SimError("instrument: unit index beyond immediate mask");
      off.variant = SetpmSpec::Variant::FuImm;
      off.fu = Component::Vu;
      off.fu_mask = Bitmap(8);
      off.fu_mask.set(iv.unit);
    } else {
      off.variant = SetpmSpec::Variant::SramRange;
      off.start_reg = 1;
      off.end_reg = 2;
      off.sram_start = iv.seg_begin * b.chip.sram_segment_bytes;
      off.sram_end = iv.seg_end * b.chip.sram_segment_bytes;
    }
    emits.push_back({iv.begin, off});
    if (!iv.open_ended) {
      // The wake runs one transition ahead of the next use and hands the
      // unit straight back to the hardware detector rather than pinning it.
      SetpmSpec on = off;
      on.mode = PolicyMode::Auto;
      emits.push_back({iv.end - d, on});
    }
  }

  // Same-cycle unit commands with the same mode fold into one immediate.
  std::map<std::tuple<uint64_t, uint8_t, uint8_t>, size_t> fold;
  std::vector<Emit> final_emits;
  for (const Emit& e : emits) {
    if (e.spec.variant == SetpmSpec::Variant::FuImm) {
      auto key = std::make_tuple(e.cycle, uint8_t(e.spec.mode), uint8_t(e.spec.fu));
      auto it = fold.find(key);
      if (it != fold.end()) {
        Bitmap& m = final_emits[it->second].spec.fu_mask;
        for (uint32_t i = 0; i < 8; i++)
          if (e.spec.fu_mask.get(i)) m.set(i);
        continue;
      }
      fold[key] = final_emits.size();
    }
    final_emits.push_back(e);
  }
  st.setpm_count = final_emits.size();

  Program out = p;
  for (const Emit& e : final_emits) {
    Instr s;
    s.kind = InstrKind::Setpm;
    s.issue_cycle = e.cycle;
    s.cycles = 1;
    s.setpm = e.spec;
    out.instrs.push_back(s);
  }
  std::stable_sort(out.instrs.begin(), out.instrs.end(),
                   [](const Instr& a, const Instr& b2) { return a.issue_cycle < b2.issue_cycle; });
  validate_program(out);
  if (stats) *stats = st;
  return out;
}

}  // namespace npupg
