#pragma once
// Spatial power gating inside a weight-stationary systolic array.
//
// Row/column gating rule: a row stays on iff it or any row above it holds a
// non-zero weight (partial sums flow downward through it); a column stays on
// iff it or any column to its right holds one (input data flows rightward
// through it). With weight tiles placed bottom-aligned in rows and
// left-aligned in columns, the powered region is a contiguous bottom-left
// rectangle of R_on x C_on PEs.
//
// Timing model, relative to the first active row/column: input row m enters
// active row r at cycle m + r and reaches active column c at cycle m + r + c.
// A PE is ON when data passes through it that cycle or will on the next
// (wake-ahead of one cycle); in-mask PEs otherwise hold weights in W_on; PEs
// outside the masks are OFF for the whole tile. The wake of the very first PE
// is not inside the trace window; the simulator charges it as the single
// exposed extra cycle at tile start.

#include <cstdint>
#include <vector>

#include "npupg/bitmap.hpp"
#include "npupg/chip_model.hpp"

namespace npupg {

struct GateMasks {
  Bitmap row_on;
  Bitmap col_on;
  uint32_t rows_on() const { return row_on.popcount(); }
  uint32_t cols_on() const { return col_on.popcount(); }
};

GateMasks compute_gate_masks(const Bitmap& row_nz, const Bitmap& col_nz);

struct SaTileExec {
  uint32_t width = 0;    // full array width
  uint64_t m_rows = 0;   // input rows streamed through the tile
  GateMasks masks;
};

// Aggregate PE-mode cycle counts over the tile window.
struct PeModeTrace {
  uint64_t latency = 0;      // cycles until the array drains: m + R_on + C_on - 1
  uint64_t on_cycles = 0;    // PE-cycles computing or waking
  uint64_t won_cycles = 0;   // PE-cycles holding weights only
  uint64_t off_cycles = 0;   // PE-cycles outside the gate masks
  uint64_t total() const { return on_cycles + won_cycles + off_cycles; }
};

// Cycle-by-cycle grid simulation; widths up to 16. The reference the analytic
// model is held to, bit for bit.
PeModeTrace per_pe_oracle(const SaTileExec& exec);

// Closed form for any width; must equal the oracle exactly.
PeModeTrace analytic_pe_trace(const SaTileExec& exec);

// Tile latency without power gating (same dataflow, nothing gated).
uint64_t ungated_tile_latency(const SaTileExec& exec);
// With PE gating: one extra cycle to wake the first PE ahead of the stream.
uint64_t gated_tile_latency(const SaTileExec& exec);

struct SaTileEnergy {
  double on_static_j = 0;
  double won_static_j = 0;
  double off_static_j = 0;
  double mac_dynamic_j = 0;
  double switching_j = 0;      // per-PE power round trips for this tile
  uint64_t transitions = 0;
  double total() const {
    return on_static_j + won_static_j + off_static_j + mac_dynamic_j + switching_j;
  }
};

// Energy of one tile under PE-level gating. macs is the real multiply count
// (padding rows/columns do no arithmetic).
SaTileEnergy sa_tile_energy(const PeModeTrace& t, const SaTileExec& exec,
                            const ChipBundle& b, uint64_t macs);

}  // namespace npupg
