#pragma once
// Executable program form: a flat, statically scheduled instruction stream for
// one chip. Lowering maps tile plans onto systolic-array weight blocks, DMA
// double buffering, and vector-unit accumulation bursts; power-management
// instructions are inserted later by the instrumentation passes.
//
// Matmul mapping: each SRAM tile splits into width x width weight blocks.
// Blocks along K run as lockstep waves across the arrays; input rows stream
// through in groups of eight, and after each group drains, one vector burst
// folds the wave's partial products (plus any carried accumulator and fused
// vector ops) on a round-robin vector unit.

#include <cstdint>
#include <string>
#include <vector>

#include "npupg/bitmap.hpp"
#include "npupg/chip_model.hpp"
#include "npupg/workload.hpp"

namespace npupg {

enum class InstrKind : uint8_t {
  SaLoadWeights,
  SaPush,
  VuOp,
  DmaIn,
  DmaOut,
  IciOp,
  HostDmaOp,
  Setpm,
  Barrier,
};
const char* instr_kind_name(InstrKind k);
bool parse_instr_kind(const std::string& s, InstrKind* out);

// Power-management instruction, 32-bit encoding:
//   [1:0]  mode        00 auto, 01 on, 10 off, 11 sleep
//   [3:2]  variant     00 sram range, 01 unit register, 10 unit immediate
//   [6:4]  unit type   0 sa, 1 vu, 2 hbm, 3 ici            (unit variants)
//   [15:8] unit mask   bit i = unit i (immediate) or register id
//   [9:4]  start reg, [15:10] end reg                      (sram range)
// Variant 11 is reserved and faults at decode.
struct SetpmSpec {
  enum class Variant : uint8_t { SramRange = 0, FuReg = 1, FuImm = 2 };
  Variant variant = Variant::FuImm;
  PolicyMode mode = PolicyMode::Auto;
  Component fu = Component::Vu;  // Sa, Vu, Hbm, Ici
  Bitmap fu_mask;                // immediate: bit i = unit i
  uint8_t reg = 0;               // FuReg
  uint8_t start_reg = 0, end_reg = 0;                // SramRange, register ids
  uint64_t sram_start = 0, sram_end = 0;             // resolved byte range
};

uint32_t encode_setpm(const SetpmSpec& s);
SetpmSpec decode_setpm(uint32_t word);  // throws SimError on reserved encodings

struct SramTouch {
  uint64_t addr = 0;
  uint64_t bytes = 0;
  bool write = false;
};

struct Instr {
  InstrKind kind = InstrKind::Barrier;
  uint64_t issue_cycle = 0;  // position in the static schedule
  uint32_t unit = 0;         // SA or VU index
  uint64_t cycles = 0;       // unit occupancy from issue
  uint64_t bytes = 0;        // DMA payload / interconnect wire bytes
  uint64_t macs = 0;         // SaPush
  uint64_t elems = 0;        // VuOp lane elements, passes included
  uint32_t rows_on = 0;      // SaLoadWeights: powered rows (K extent)
  uint32_t cols_on = 0;      // SaLoadWeights: powered columns (N extent)
  uint64_t m_total = 0;      // SaLoadWeights: rows that will stream through
  uint32_t dma_id = 0;       // DmaIn/DmaOut/HostDmaOp, unique, from 1
  uint32_t wait_dma_id = 0;  // 0 = no data dependency on a transfer
  bool waits_on_dma = false; // a DMA completion decided this issue cycle
  SetpmSpec setpm;
  std::vector<SramTouch> sram;
  std::string note;
};

struct PlanSpan {
  uint32_t plan_index = 0;
  uint64_t begin = 0, end = 0;  // static cycles covered by the plan
};

struct Program {
  std::string chip_name;
  uint32_t num_sa = 0, num_vu = 0;
  uint64_t sram_bytes = 0;
  std::vector<Instr> instrs;  // nondecreasing issue_cycle
  uint64_t static_cycles = 0;
  uint64_t sram_high_water = 0;
  std::vector<PlanSpan> plan_spans;

  size_t count(InstrKind k) const;
};

Program lower(const Graph& g, const std::vector<TilePlan>& plans, const ChipConfig& chip);

// Throws SimError naming the first malformed instruction.
void validate_program(const Program& p);

// Idle distance between consecutive bursts on each vector unit:
//   distance = issue(next) - (issue(prev) + cycles(prev)).
// A burst whose issue cycle was pinned by a DMA completion reports
// kDistUnknown instead; its real slack depends on memory timing.
constexpr uint64_t kDistUnknown = UINT64_MAX;
std::vector<std::vector<uint64_t>> vu_slot_distances(const Program& p);

std::string dump_program(const Program& p);
Program parse_program(const std::string& text, const std::string& origin);

}  // namespace npupg
