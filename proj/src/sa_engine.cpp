#include "npupg/sa_engine.hpp"

#include <cassert>

namespace npupg {

GateMasks compute_gate_masks(const Bitmap& row_nz, const Bitmap& col_nz) {
  assert(row_nz.width() == col_nz.width());
  GateMasks m;
  m.row_on = row_nz.prefix_or();
  m.col_on = col_nz.suffix_or();
  return m;
}

uint64_t ungated_tile_latency(const SaTileExec& exec) {
  uint64_t r = exec.masks.rows_on();
  uint64_t c = exec.masks.cols_on();
  if (exec.m_rows == 0 || r == 0 || c == 0) return 0;
  return exec.m_rows + r + c - 1;
}

uint64_t gated_tile_latency(const SaTileExec& exec) {
  uint64_t base = ungated_tile_latency(exec);
  return base == 0 ? 0 : base + 1;
}

PeModeTrace per_pe_oracle(const SaTileExec& exec) {
  const uint32_t w = exec.width;
  assert(w <= 16 && "oracle is for small grids only");
  const uint64_t r_on = exec.masks.rows_on();
  const uint64_t c_on = exec.masks.cols_on();
  PeModeTrace t;
  t.latency = ungated_tile_latency(exec);
  if (t.latency == 0) return t;

  // Timing runs in active-relative coordinates: a PE's offsets are its row's
  // and column's ranks among the powered rows/columns. For masks produced by
  // compute_gate_masks those are contiguous runs, but ranks keep the schedule
  // well defined for any mask pair.
  std::vector<uint32_t> row_rank(w, 0), col_rank(w, 0);
  for (uint32_t k = 0, rank = 0; k < w; k++) {
    row_rank[k] = rank;
    if (exec.masks.row_on.get(k)) rank++;
  }
  for (uint32_t n = 0, rank = 0; n < w; n++) {
    col_rank[n] = rank;
    if (exec.masks.col_on.get(n)) rank++;
  }
  (void)r_on;
  (void)c_on;

  const uint64_t m = exec.m_rows;
  for (uint64_t cyc = 0; cyc < t.latency; cyc++) {
    for (uint32_t k = 0; k < w; k++) {
      for (uint32_t n = 0; n < w; n++) {
        bool in_mask = exec.masks.row_on.get(k) && exec.masks.col_on.get(n);
        if (!in_mask) {
          t.off_cycles++;
          continue;
        }
        uint64_t skew = row_rank[k] + col_rank[n];
        auto computes = [&](uint64_t at) { return at >= skew && at - skew < m; };
        if (computes(cyc) || computes(cyc + 1))
          t.on_cycles++;
        else
          t.won_cycles++;
      }
    }
  }
  return t;
}

PeModeTrace analytic_pe_trace(const SaTileExec& exec) {
  const uint64_t w = exec.width;
  const uint64_t r_on = exec.masks.rows_on();
  const uint64_t c_on = exec.masks.cols_on();
  PeModeTrace t;
  t.latency = ungated_tile_latency(exec);
  if (t.latency == 0) return t;
  const uint64_t active = r_on * c_on;
  // Each active PE is ON for its m_rows pass-through cycles plus one wake
  // cycle; the corner PE's wake precedes the window.
  t.on_cycles = active * (exec.m_rows + 1) - 1;
  t.won_cycles = active * t.latency - t.on_cycles;
  t.off_cycles = (w * w - active) * t.latency;
  return t;
}

SaTileEnergy sa_tile_energy(const PeModeTrace& t, const SaTileExec& exec,
                            const ChipBundle& b, uint64_t macs) {
  SaTileEnergy e;
  const double pe_w = instance_static_w(b, GateKind::SaPe);
  const double f = b.chip.frequency_hz;
  e.on_static_j = double(t.on_cycles) * pe_w / f;
  e.won_static_j = double(t.won_cycles) * pe_w * b.power.w_on_fraction / f;
  e.off_static_j = double(t.off_cycles) * pe_w * b.power.leak_logic_off / f;
  e.mac_dynamic_j = double(macs) * b.power.sa_mac_j;
  e.transitions = uint64_t(exec.masks.rows_on()) * exec.masks.cols_on();
  e.switching_j = double(e.transitions) * switching_energy(b, GateKind::SaPe);
  return e;
}

}  // namespace npupg
