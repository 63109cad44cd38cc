#include "npupg/program_ir.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>

namespace npupg {

const char* instr_kind_name(InstrKind k) {
  switch (k) {
    case InstrKind::SaLoadWeights: return "sa_load";
    case InstrKind::SaPush: return "sa_push";
    case InstrKind::VuOp: return "vuop";
    case InstrKind::DmaIn: return "dma_in";
    case InstrKind::DmaOut: return "dma_out";
    case InstrKind::IciOp: return "ici";
    case InstrKind::HostDmaOp: return "host_dma";
    case InstrKind::Setpm: return "setpm";
    case InstrKind::Barrier: return "barrier";
  }
  return "?";
}

bool parse_instr_kind(const std::string& s, InstrKind* out) {
  for (int i = 0; i <= int(InstrKind::Barrier); i++) {
    if (s == instr_kind_name(InstrKind(i))) {
      *out = InstrKind(i);
      return true;
    }
  }
  return false;
}

size_t Program::count(InstrKind k) const {
  size_t n = 0;
  for (const Instr& in : instrs)
    if (in.kind == k) n++;
  return n;
}

// ---------------------------------------------------------------------------
// setpm encoding.

namespace {

uint32_t mode_code(PolicyMode m) {
  switch (m) {
    case PolicyMode::Auto: return 0;
    case PolicyMode::On: return 1;
    case PolicyMode::Off: return 2;
    case PolicyMode::Sleep: return 3;
  }
  return 0;
}

PolicyMode mode_from_code(uint32_t c) {
  switch (c & 3) {
    case 0: return PolicyMode::Auto;
    case 1: return PolicyMode::On;
    case 2: return PolicyMode::Off;
    default: return PolicyMode::Sleep;
  }
}

uint32_t fu_code(Component c) {
  switch (c) {
    case Component::Sa: return 0;
    case Component::Vu: return 1;
    case Component::Hbm: return 2;
    case Component::Ici: return 3;
    default: throw SimError("setpm: component has no unit code");
  }
}

Component fu_from_code(uint32_t c) {
  switch (c & 7) {
    case 0: return Component::Sa;
    case 1: return Component::Vu;
    case 2: return Component::Hbm;
    case 3: return Component::Ici;
    default: throw SimError("setpm: reserved unit type " + std::to_string(c & 7));
  }
}

}  // namespace

uint32_t encode_setpm(const SetpmSpec& s) {
  uint32_t w = mode_code(s.mode);
  switch (s.variant) {
    case SetpmSpec::Variant::SramRange:
      w |= (uint32_t(s.start_reg) & 0x3f) << 4;
      w |= (uint32_t(s.end_reg) & 0x3f) << 10;
      break;
    case SetpmSpec::Variant::FuReg:
      w |= 1u << 2;
      w |= fu_code(s.fu) << 4;
      w |= uint32_t(s.reg) << 8;
      break;
    case SetpmSpec::Variant::FuImm: {
      w |= 2u << 2;
      w |= fu_code(s.fu) << 4;
      uint32_t mask = 0;
      for (uint32_t i = 0; i < 8 && i < s.fu_mask.width(); i++)
        if (s.fu_mask.get(i)) mask |= 1u << i;
      w |= mask << 8;
      break;
    }
  }
  return w;
}

SetpmSpec decode_setpm(uint32_t word) {
  SetpmSpec s;
  s.mode = mode_from_code(word);
  uint32_t variant = (word >> 2) & 3;
  if (variant == 3)
    throw SimError("setpm: reserved variant in word 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%X", word);
      return std::string(buf);
    }());
  s.variant = SetpmSpec::Variant(variant);
  switch (s.variant) {
    case SetpmSpec::Variant::SramRange:
      s.start_reg = (word >> 4) & 0x3f;
      s.end_reg = (word >> 10) & 0x3f;
      break;
    case SetpmSpec::Variant::FuReg:
      s.fu = fu_from_code(word >> 4);
      s.reg = (word >> 8) & 0xff;
      break;
    case SetpmSpec::Variant::FuImm:
      s.fu = fu_from_code(word >> 4);
      s.fu_mask = Bitmap::from_lsb0((word >> 8) & 0xff, 8);
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Lowering.

namespace {

uint32_t chain_vu_passes(OpKind k) {
  switch (k) {
    case OpKind::Elementwise: return 1;
    case OpKind::Softmax: return 4;
    case OpKind::LayerNorm: return 5;
    default: return 0;
  }
}

class Lowerer {
 public:
  Lowerer(const Graph& g, const std::vector<TilePlan>& plans, const ChipConfig& chip)
      : g_(g), plans_(plans), chip_(chip) {
    p_.chip_name = chip.name;
    p_.num_sa = chip.num_sa;
    p_.num_vu = chip.num_vu;
    p_.sram_bytes = chip.sram_bytes;
    sa_free_.assign(chip.num_sa, 0);
    vu_free_.assign(chip.num_vu, 0);
    free_list_.push_back({0, chip.sram_bytes});
  }

  Program run() {
    for (uint32_t pi = 0; pi < plans_.size(); pi++) {
      const TilePlan& plan = plans_[pi];
      uint64_t begin = cur_;
      const Operator& a = g_.op(plan.anchor());
      switch (a.kind) {
        case OpKind::MatMul: lower_matmul(plan); break;
        case OpKind::Elementwise:
        case OpKind::Softmax:
        case OpKind::LayerNorm: lower_streaming(plan); break;
        case OpKind::EmbeddingLookup: lower_embedding(plan); break;
        case OpKind::Collective: lower_collective(plan); break;
        case OpKind::HostDma: lower_host_dma(plan); break;
      }
      finish_plan();
      p_.plan_spans.push_back({pi, begin, cur_});
    }
    p_.static_cycles = cur_;
    p_.sram_high_water = hi_water_;
    std::stable_sort(p_.instrs.begin(), p_.instrs.end(),
                     [](const Instr& x, const Instr& y) { return x.issue_cycle < y.issue_cycle; });
    return std::move(p_);
  }

 private:
  struct Dma {
    uint64_t done = 0;
    uint32_t id = 0;
  };

  uint64_t alloc(uint64_t bytes, const char* what) {
    bytes = align_up_u64(std::max<uint64_t>(bytes, 1), chip_.sram_segment_bytes);
    for (size_t i = 0; i < free_list_.size(); i++) {
      if (free_list_[i].bytes >= bytes) {
        uint64_t addr = free_list_[i].addr;
        free_list_[i].addr += bytes;
        free_list_[i].bytes -= bytes;
        if (free_list_[i].bytes == 0) free_list_.erase(free_list_.begin() + i);
        live_.push_back({addr, bytes});
        hi_water_ = std::max(hi_water_, addr + bytes);
        return addr;
      }
    }
    throw SimError(std::string("lower: SRAM allocation failed for ") + what);
  }

  void release(uint64_t addr, uint64_t bytes) {
    bytes = align_up_u64(std::max<uint64_t>(bytes, 1), chip_.sram_segment_bytes);
    auto it = std::lower_bound(free_list_.begin(), free_list_.end(), addr,
                               [](const Block& b, uint64_t a) { return b.addr < a; });
    it = free_list_.insert(it, {addr, bytes});
    // Coalesce with neighbors.
    if (it + 1 != free_list_.end() && it->addr + it->bytes == (it + 1)->addr) {
      it->bytes += (it + 1)->bytes;
      free_list_.erase(it + 1);
    }
    if (it != free_list_.begin() && (it - 1)->addr + (it - 1)->bytes == it->addr) {
      (it - 1)->bytes += it->bytes;
      free_list_.erase(it);
    }
  }

  // Scratch allocations live for one plan; finish_plan returns them.
  uint64_t plan_alloc(uint64_t bytes, const char* what) {
    uint64_t addr = alloc(bytes, what);
    plan_allocs_.push_back(live_.back());
    return addr;
  }

  void finish_plan() {
    cur_ = std::max({cur_, hbm_free_, last_dma_done_});
    for (uint64_t f : sa_free_) cur_ = std::max(cur_, f);
    for (uint64_t f : vu_free_) cur_ = std::max(cur_, f);
    Instr b;
    b.kind = InstrKind::Barrier;
    b.issue_cycle = cur_;
    p_.instrs.push_back(std::move(b));
    for (const Block& blk : plan_allocs_) release(blk.addr, blk.bytes);
    plan_allocs_.clear();
    live_.clear();
  }

  Dma dma(InstrKind kind, uint64_t at, uint64_t bytes, uint64_t addr, bool write,
          std::string note, double bw_scale = 1.0) {
    uint64_t dur = static_cast<uint64_t>(
        std::ceil(bytes / (chip_.hbm_bytes_per_cycle() * bw_scale)));
    uint64_t start = std::max(at, hbm_free_);
    uint64_t done = start + chip_.hbm_latency_cycles + dur;
    hbm_free_ = start + dur;
    last_dma_done_ = std::max(last_dma_done_, done);
    Instr in;
    in.kind = kind;
    in.issue_cycle = at;
    in.cycles = dur;
    in.bytes = bytes;
    in.dma_id = next_dma_++;
    in.sram.push_back({addr, bytes, write});
    in.note = std::move(note);
    p_.instrs.push_back(std::move(in));
    return {done, p_.instrs.back().dma_id};
  }

  // -- matmul ---------------------------------------------------------------

  struct MmIterDma {
    Dma a, b, x;
    bool has_x = false;
  };

  void lower_matmul(const TilePlan& plan) {
    const Operator& op = g_.op(plan.anchor());
    const uint64_t w = chip_.sa_width;
    const uint64_t d = op.dtype_bytes;
    const uint64_t tm = plan.tile_m, tk = plan.tile_k, tn = plan.tile_n;

    uint32_t chain_passes = 0;
    uint64_t extra_streams = 0;
    for (size_t i = 1; i < plan.op_ids.size(); i++) {
      const Operator& c = g_.op(plan.op_ids[i]);
      chain_passes += chain_vu_passes(c.kind);
      if (c.arity > 1) extra_streams += c.arity - 1;
    }

    uint64_t abuf[2], bbuf[2];
    for (int i = 0; i < 2; i++) {
      abuf[i] = plan_alloc(tm * tk * d, "matmul input tile");
      bbuf[i] = plan_alloc(tk * tn * d, "matmul weight tile");
    }
    uint64_t obuf = plan_alloc(tm * tn * d, "matmul accumulator");
    uint64_t xbuf = extra_streams ? plan_alloc(extra_streams * tm * tn * d, "fused operand")
                                  : 0;
    std::vector<uint64_t> pbuf(chip_.num_sa);
    for (uint32_t s = 0; s < chip_.num_sa; s++)
      pbuf[s] = plan_alloc(8 * w * d, "partial buffer");

    struct It {
      uint64_t im, in, ik;
    };
    std::vector<It> iters;
    for (uint64_t im = 0; im < plan.tiles_m; im++)
      for (uint64_t in = 0; in < plan.tiles_n; in++)
        for (uint64_t ik = 0; ik < plan.tiles_k; ik++) iters.push_back({im, in, ik});

    auto edge = [](uint64_t dim, uint64_t tile, uint64_t idx) {
      return std::min(tile, dim - idx * tile);
    };
    auto issue_dmas = [&](size_t j, uint64_t at) {
      const It& it = iters[j];
      int par = int(j & 1);
      uint64_t tm_e = edge(op.m, tm, it.im), tk_e = edge(op.k, tk, it.ik),
               tn_e = edge(op.n, tn, it.in);
      MmIterDma md;
      md.a = dma(InstrKind::DmaIn, at, tm_e * tk_e * d, abuf[par], true, op.label + ".in");
      md.b = dma(InstrKind::DmaIn, at, tk_e * tn_e * d, bbuf[par], true, op.label + ".w");
      if (extra_streams && it.ik == plan.tiles_k - 1) {
        md.x = dma(InstrKind::DmaIn, at, extra_streams * tm_e * tn_e * d, xbuf, true,
                   op.label + ".fused_in");
        md.has_x = true;
      }
      return md;
    };

    MmIterDma pending[2];
    for (size_t j = 0; j < iters.size(); j++) {
      const It& it = iters[j];
      int par = int(j & 1);
      if (j == 0) pending[0] = issue_dmas(0, cur_);
      if (j + 1 < iters.size()) pending[(j + 1) & 1] = issue_dmas(j + 1, cur_);
      const MmIterDma& md = pending[par];

      uint64_t tm_e = edge(op.m, tm, it.im), tk_e = edge(op.k, tk, it.ik),
               tn_e = edge(op.n, tn, it.in);
      uint64_t nb_n = ceil_div_u64(tn_e, w), nb_k = ceil_div_u64(tk_e, w);
      bool last_k = it.ik == plan.tiles_k - 1;
      uint64_t out_ready = 0;

      for (uint64_t nblk = 0; nblk < nb_n; nblk++) {
        uint32_t n_eff = uint32_t(std::min(w, tn_e - nblk * w));
        for (uint64_t wv = 0; wv < nb_k; wv += chip_.num_sa) {
          uint32_t wave = uint32_t(std::min<uint64_t>(chip_.num_sa, nb_k - wv));
          bool carry = it.ik > 0 || wv > 0;
          bool apply_chain = last_k && wv + wave == nb_k;

          uint64_t t_load = cur_;
          for (uint32_t s = 0; s < wave; s++) t_load = std::max(t_load, sa_free_[s]);
          bool load_waits = md.b.done > t_load;
          if (load_waits) t_load = md.b.done;
          uint32_t max_k = 0;
          for (uint32_t s = 0; s < wave; s++) {
            uint32_t k_eff = uint32_t(std::min(w, tk_e - (wv + s) * w));
            max_k = std::max(max_k, k_eff);
            Instr in;
            in.kind = InstrKind::SaLoadWeights;
            in.issue_cycle = t_load;
            in.unit = s;
            in.cycles = k_eff;
            in.rows_on = k_eff;
            in.cols_on = n_eff;
            in.m_total = tm_e;
            in.wait_dma_id = md.b.id;
            in.waits_on_dma = load_waits;
            in.sram.push_back({bbuf[par] + (wv + s) * w * tn_e * d,
                               uint64_t(k_eff) * n_eff * d, false});
            in.note = op.label;
            p_.instrs.push_back(std::move(in));
          }
          uint64_t load_done = t_load + max_k;
          uint64_t drain = max_k + n_eff - 1;
          uint64_t base = load_done;
          bool push_waits = wv == 0 && md.a.done > base;
          if (push_waits) base = md.a.done;

          uint64_t groups = ceil_div_u64(tm_e, 8);
          uint64_t last_push_end = base;
          for (uint64_t gi = 0; gi < groups; gi++) {
            uint32_t rows = uint32_t(std::min<uint64_t>(8, tm_e - 8 * gi));
            uint64_t push = base + 8 * gi;
            for (uint32_t s = 0; s < wave; s++) {
              uint32_t k_eff = uint32_t(std::min(w, tk_e - (wv + s) * w));
              Instr in;
              in.kind = InstrKind::SaPush;
              in.issue_cycle = push;
              in.unit = s;
              in.cycles = rows;
              in.macs = uint64_t(rows) * k_eff * n_eff;
              if (gi == 0) {
                in.wait_dma_id = md.a.id;
                in.waits_on_dma = push_waits;
              }
              in.sram.push_back({abuf[par] + gi * 8 * tk_e * d, uint64_t(rows) * k_eff * d,
                                 false});
              in.sram.push_back({pbuf[s], uint64_t(rows) * n_eff * d, true});
              in.note = op.label;
              p_.instrs.push_back(std::move(in));
            }
            last_push_end = push + rows;

            uint64_t burst_ready = push + rows + drain;
            uint32_t vu = vu_rr_++ % chip_.num_vu;
            uint64_t issue = std::max(burst_ready, vu_free_[vu]);
            uint32_t passes = wave + (carry ? 1 : 0) + (apply_chain ? chain_passes : 0);
            bool vu_waits = false;
            uint32_t vu_wait_id = 0;
            if (apply_chain && md.has_x) {
              vu_wait_id = md.x.id;
              if (md.x.done > issue) {
                issue = md.x.done;
                vu_waits = true;
              }
            }
            uint64_t group_elems = uint64_t(rows) * n_eff;
            uint64_t pass_cycles = ceil_div_u64(group_elems, chip_.vu_elems_per_cycle());
            Instr in;
            in.kind = InstrKind::VuOp;
            in.issue_cycle = issue;
            in.unit = vu;
            in.cycles = std::max<uint64_t>(1, passes * pass_cycles);
            in.elems = group_elems * passes;
            in.wait_dma_id = vu_wait_id;
            in.waits_on_dma = vu_waits;
            for (uint32_t s = 0; s < wave; s++)
              in.sram.push_back({pbuf[s], group_elems * d, false});
            uint64_t orow = obuf + (gi * 8 * tn_e + nblk * w) * d;
            if (carry) in.sram.push_back({orow, group_elems * d, false});
            if (apply_chain && extra_streams)
              in.sram.push_back({xbuf + gi * 8 * tn_e * d, group_elems * d * extra_streams,
                                 false});
            in.sram.push_back({orow, group_elems * d, true});
            in.note = op.label;
            p_.instrs.push_back(std::move(in));
            vu_free_[vu] = issue + in.cycles;
            out_ready = std::max(out_ready, issue + in.cycles);
          }
          for (uint32_t s = 0; s < wave; s++) {
            uint32_t k_eff = uint32_t(std::min(w, tk_e - (wv + s) * w));
            sa_free_[s] = last_push_end + k_eff + n_eff - 1;
          }
        }
      }
      if (last_k)
        dma(InstrKind::DmaOut, out_ready, tm_e * tn_e * d, obuf, false, op.label + ".out");
      // Next iteration's weight loads queue behind this one's arrays, not its
      // vector tail; DMA prefetch for it was already issued above.
      for (uint64_t f : sa_free_) cur_ = std::max(cur_, f);
    }
  }

  // -- streaming vector plans ----------------------------------------------

  void lower_streaming(const TilePlan& plan) {
    const Operator& op = g_.op(plan.anchor());
    const uint64_t d = op.dtype_bytes;
    uint64_t primary = 0;
    uint32_t in_streams = 1;
    uint32_t passes = chain_vu_passes(op.kind);
    if (op.kind == OpKind::Elementwise) {
      primary = op.elems * d;
      in_streams = op.arity;
    } else {
      primary = op.rows * op.cols * d;
    }
    for (size_t i = 1; i < plan.op_ids.size(); i++) {
      const Operator& c = g_.op(plan.op_ids[i]);
      passes += chain_vu_passes(c.kind);
      if (c.arity > 1) in_streams += c.arity - 1;
    }

    int nbuf = plan.num_chunks > 1 ? 2 : 1;
    std::vector<std::vector<uint64_t>> ibuf(in_streams);
    for (uint32_t s = 0; s < in_streams; s++)
      for (int b = 0; b < nbuf; b++)
        ibuf[s].push_back(plan_alloc(plan.chunk_bytes, "stream input"));
    std::vector<uint64_t> obuf;
    for (int b = 0; b < nbuf; b++) obuf.push_back(plan_alloc(plan.chunk_bytes, "stream output"));

    auto chunk_bytes_at = [&](uint64_t c) {
      uint64_t off = c * plan.chunk_bytes;
      return std::min(plan.chunk_bytes, primary - off);
    };
    struct ChunkDma {
      uint64_t done = 0;
      uint32_t id = 0;
    };
    auto issue_chunk = [&](uint64_t c, uint64_t at) {
      ChunkDma cd;
      int par = int(c & 1) % nbuf;
      for (uint32_t s = 0; s < in_streams; s++) {
        Dma dd = dma(InstrKind::DmaIn, at, chunk_bytes_at(c), ibuf[s][par], true,
                     op.label + ".in");
        if (dd.done > cd.done) {
          cd.done = dd.done;
          cd.id = dd.id;
        }
      }
      return cd;
    };

    ChunkDma pending[2];
    for (uint64_t c = 0; c < plan.num_chunks; c++) {
      int par = int(c & 1) % nbuf;
      if (c == 0) pending[0] = issue_chunk(0, cur_);
      if (c + 1 < plan.num_chunks) pending[(c + 1) & 1] = issue_chunk(c + 1, cur_);
      const ChunkDma& cd = pending[par];

      uint64_t bytes_c = chunk_bytes_at(c);
      uint64_t elems_c = std::max<uint64_t>(1, bytes_c / d);
      uint32_t vu = vu_rr_++ % chip_.num_vu;
      uint64_t issue = std::max(vu_free_[vu], cd.done);
      Instr in;
      in.kind = InstrKind::VuOp;
      in.issue_cycle = issue;
      in.unit = vu;
      in.cycles = std::max<uint64_t>(
          1, uint64_t(passes) * ceil_div_u64(elems_c, chip_.vu_elems_per_cycle()));
      in.elems = elems_c * std::max<uint32_t>(passes, 1);
      in.wait_dma_id = cd.id;
      in.waits_on_dma = cd.done >= vu_free_[vu];
      for (uint32_t s = 0; s < in_streams; s++)
        in.sram.push_back({ibuf[s][par], bytes_c, false});
      in.sram.push_back({obuf[par], bytes_c, true});
      in.note = op.label;
      p_.instrs.push_back(std::move(in));
      uint64_t end = issue + in.cycles;
      vu_free_[vu] = end;
      cur_ = std::max(cur_, issue);
      dma(InstrKind::DmaOut, end, bytes_c, obuf[par], false, op.label + ".out");
    }
  }

  void lower_embedding(const TilePlan& plan) {
    const Operator& op = g_.op(plan.anchor());
    uint64_t primary = op.num_lookups * op.vector_bytes;
    int nbuf = plan.num_chunks > 1 ? 2 : 1;
    std::vector<uint64_t> buf;
    for (int b = 0; b < nbuf; b++) buf.push_back(plan_alloc(plan.chunk_bytes, "gather buffer"));
    for (uint64_t c = 0; c < plan.num_chunks; c++) {
      int par = int(c & 1) % nbuf;
      uint64_t off = c * plan.chunk_bytes;
      uint64_t bytes_c = std::min(plan.chunk_bytes, primary - off);
      // Gather reads are scattered; bill half the streaming bandwidth.
      Dma in = dma(InstrKind::DmaIn, cur_, bytes_c, buf[par], true, op.label + ".gather", 0.5);
      dma(InstrKind::DmaOut, in.done, bytes_c, buf[par], false, op.label + ".pack");
      cur_ = std::max(cur_, in.done);
    }
  }

  void lower_collective(const TilePlan& plan) {
    const Operator& op = g_.op(plan.anchor());
    uint64_t stage = plan_alloc(plan.sram_demand, "collective staging");
    uint64_t first_bytes = std::min(plan.chunk_bytes, op.bytes);
    Dma in = dma(InstrKind::DmaIn, cur_, first_bytes, stage, true, op.label + ".stage");
    for (uint64_t c = 1; c < plan.num_chunks; c++) {
      uint64_t off = c * plan.chunk_bytes;
      dma(InstrKind::DmaIn, cur_, std::min(plan.chunk_bytes, op.bytes - off),
          stage + (c & 1) * plan.chunk_bytes, true, op.label + ".stage");
    }
    uint64_t cycles = collective_cycles(op.coll, op.bytes, op.participants, chip_);
    Instr ici;
    ici.kind = InstrKind::IciOp;
    ici.issue_cycle = in.done;
    ici.cycles = cycles;
    ici.bytes = op.bytes;
    ici.wait_dma_id = in.id;
    ici.waits_on_dma = true;
    ici.sram.push_back({stage, std::min(plan.sram_demand, op.bytes), false});
    ici.note = op.label;
    p_.instrs.push_back(std::move(ici));
    uint64_t end = in.done + cycles;
    // Results leave through the same double-buffered staging window; the
    // payload never sits in SRAM whole.
    for (uint64_t c = 0; c < plan.num_chunks; c++) {
      uint64_t off = c * plan.chunk_bytes;
      dma(InstrKind::DmaOut, end, std::min(plan.chunk_bytes, op.bytes - off),
          stage + (c & 1) * plan.chunk_bytes, false, op.label + ".unstage");
    }
    cur_ = std::max(cur_, end);
  }

  void lower_host_dma(const TilePlan& plan) {
    const Operator& op = g_.op(plan.anchor());
    uint64_t stage = plan_alloc(plan.sram_demand, "host staging");
    // Host link runs at a quarter of HBM streaming bandwidth.
    Dma d = dma(InstrKind::HostDmaOp, cur_, op.bytes, stage, op.host_to_device,
                op.label, 0.25);
    cur_ = std::max(cur_, d.done);
  }

  const Graph& g_;
  const std::vector<TilePlan>& plans_;
  const ChipConfig& chip_;
  Program p_;

  struct Block {
    uint64_t addr = 0, bytes = 0;
  };
  std::vector<Block> free_list_, live_, plan_allocs_;
  uint64_t hi_water_ = 0;

  uint64_t cur_ = 0;
  uint64_t hbm_free_ = 0;
  uint64_t last_dma_done_ = 0;
  std::vector<uint64_t> sa_free_, vu_free_;
  uint32_t next_dma_ = 1;
  uint32_t vu_rr_ = 0;
};

}  // namespace

Program lower(const Graph& g, const std::vector<TilePlan>& plans, const ChipConfig& chip) {
  return Lowerer(g, plans, chip).run();
}

// ---------------------------------------------------------------------------

void validate_program(const Program& p) {
  auto fail = [](size_t i, const std::string& what) {
    throw SimError("program: instr " + std::to_string(i) + ": " + what);
  };
  uint64_t prev = 0;
  std::vector<uint32_t> dma_ids;
  for (size_t i = 0; i < p.instrs.size(); i++) {
    const Instr& in = p.instrs[i];
    if (in.issue_cycle < prev) fail(i, "issue cycles must be nondecreasing");
    prev = in.issue_cycle;
    switch (in.kind) {
      case InstrKind::SaLoadWeights:
      case InstrKind::SaPush:
        if (in.unit >= p.num_sa) fail(i, "systolic array index out of range");
        break;
      case InstrKind::VuOp:
        if (in.unit >= p.num_vu) fail(i, "vector unit index out of range");
        if (in.cycles == 0) fail(i, "vector op must occupy at least one cycle");
        break;
      case InstrKind::DmaIn:
      case InstrKind::DmaOut:
      case InstrKind::HostDmaOp:
        if (in.dma_id == 0) fail(i, "transfer without an id");
        dma_ids.push_back(in.dma_id);
        break;
      case InstrKind::Setpm:
        decode_setpm(encode_setpm(in.setpm));
        if (in.setpm.variant == SetpmSpec::Variant::SramRange &&
            (in.setpm.sram_end <= in.setpm.sram_start || in.setpm.sram_end > p.sram_bytes))
          fail(i, "power range is empty or outside SRAM");
        break;
      default: break;
    }
    for (const SramTouch& t : in.sram)
      if (t.addr + t.bytes > p.sram_bytes) fail(i, "SRAM access outside capacity");
  }
  std::sort(dma_ids.begin(), dma_ids.end());
  if (std::adjacent_find(dma_ids.begin(), dma_ids.end()) != dma_ids.end())
    throw SimError("program: duplicate transfer id");
  for (size_t i = 0; i < p.instrs.size(); i++) {
    uint32_t w = p.instrs[i].wait_dma_id;
    if (w && !std::binary_search(dma_ids.begin(), dma_ids.end(), w))
      fail(i, "waits on unknown transfer " + std::to_string(w));
  }
}

std::vector<std::vector<uint64_t>> vu_slot_distances(const Program& p) {
  std::vector<std::vector<uint64_t>> out(p.num_vu);
  std::vector<const Instr*> last(p.num_vu, nullptr);
  for (const Instr& in : p.instrs) {
    if (in.kind != InstrKind::VuOp) continue;
    if (last[in.unit]) {
      if (in.waits_on_dma)
        out[in.unit].push_back(kDistUnknown);
      else
        out[in.unit].push_back(in.issue_cycle -
                               (last[in.unit]->issue_cycle + last[in.unit]->cycles));
    }
    last[in.unit] = &in;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text form.

std::string dump_program(const Program& p) {
  std::ostringstream os;
  os << "program chip=" << p.chip_name << " sa=" << p.num_sa << " vu=" << p.num_vu
     << " sram=" << p.sram_bytes << " cycles=" << p.static_cycles
     << " highwater=" << p.sram_high_water << "\n";
  for (const PlanSpan& s : p.plan_spans)
    os << "plan " << s.plan_index << " begin=" << s.begin << " end=" << s.end << "\n";
  for (const Instr& in : p.instrs) {
    os << "@" << in.issue_cycle << " " << instr_kind_name(in.kind);
    if (in.kind == InstrKind::SaLoadWeights || in.kind == InstrKind::SaPush ||
        in.kind == InstrKind::VuOp)
      os << " unit=" << in.unit;
    if (in.cycles) os << " cycles=" << in.cycles;
    if (in.bytes) os << " bytes=" << in.bytes;
    if (in.macs) os << " macs=" << in.macs;
    if (in.elems) os << " elems=" << in.elems;
    if (in.kind == InstrKind::SaLoadWeights)
      os << " rows=" << in.rows_on << " cols=" << in.cols_on << " m=" << in.m_total;
    if (in.dma_id) os << " id=" << in.dma_id;
    if (in.wait_dma_id) os << " wait=" << in.wait_dma_id;
    if (in.waits_on_dma) os << " wdma";
    if (in.kind == InstrKind::Setpm) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "0x%X", encode_setpm(in.setpm));
      os << " word=" << buf;
      if (in.setpm.variant == SetpmSpec::Variant::SramRange)
        os << " start=" << in.setpm.sram_start << " end=" << in.setpm.sram_end;
    }
    if (!in.sram.empty()) {
      os << " sram=";
      for (size_t i = 0; i < in.sram.size(); i++) {
        if (i) os << ",";
        os << (in.sram[i].write ? "w:" : "r:") << in.sram[i].addr << "+" << in.sram[i].bytes;
      }
    }
    if (!in.note.empty()) os << " note=" << in.note;
    os << "\n";
  }
  return os.str();
}

namespace {

uint64_t parse_u64(const std::string& s, const std::string& ctx) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SimError(ctx + ": bad number '" + s + "'");
  }
}

}  // namespace

Program parse_program(const std::string& text, const std::string& origin) {
  Program p;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    std::string ctx = origin + ":" + std::to_string(lineno);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    std::map<std::string, std::string> kv;
    std::string head2;
    if (tok == "program" || tok == "plan") {
      std::string t;
      if (tok == "plan") ls >> head2;
      while (ls >> t) {
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw SimError(ctx + ": expected key=value, got " + t);
        kv[t.substr(0, eq)] = t.substr(eq + 1);
      }
      if (tok == "program") {
        p.chip_name = kv.count("chip") ? kv["chip"] : "";
        p.num_sa = uint32_t(parse_u64(kv["sa"], ctx));
        p.num_vu = uint32_t(parse_u64(kv["vu"], ctx));
        p.sram_bytes = parse_u64(kv["sram"], ctx);
        p.static_cycles = parse_u64(kv["cycles"], ctx);
        p.sram_high_water = parse_u64(kv["highwater"], ctx);
      } else {
        PlanSpan s;
        s.plan_index = uint32_t(parse_u64(head2, ctx));
        s.begin = parse_u64(kv["begin"], ctx);
        s.end = parse_u64(kv["end"], ctx);
        p.plan_spans.push_back(s);
      }
      continue;
    }
    if (tok.empty() || tok[0] != '@') throw SimError(ctx + ": expected @cycle");
    Instr in;
    in.issue_cycle = parse_u64(tok.substr(1), ctx);
    std::string kind_s;
    ls >> kind_s;
    if (!parse_instr_kind(kind_s, &in.kind))
      throw SimError(ctx + ": unknown instruction '" + kind_s + "'");
    std::string t;
    while (ls >> t) {
      if (t == "wdma") {
        in.waits_on_dma = true;
        continue;
      }
      size_t eq = t.find('=');
      if (eq == std::string::npos) throw SimError(ctx + ": expected key=value, got " + t);
      std::string key = t.substr(0, eq), val = t.substr(eq + 1);
      if (key == "unit") in.unit = uint32_t(parse_u64(val, ctx));
      else if (key == "cycles") in.cycles = parse_u64(val, ctx);
      else if (key == "bytes") in.bytes = parse_u64(val, ctx);
      else if (key == "macs") in.macs = parse_u64(val, ctx);
      else if (key == "elems") in.elems = parse_u64(val, ctx);
      else if (key == "rows") in.rows_on = uint32_t(parse_u64(val, ctx));
      else if (key == "cols") in.cols_on = uint32_t(parse_u64(val, ctx));
      else if (key == "m") in.m_total = parse_u64(val, ctx);
      else if (key == "id") in.dma_id = uint32_t(parse_u64(val, ctx));
      else if (key == "wait") in.wait_dma_id = uint32_t(parse_u64(val, ctx));
      else if (key == "word") in.setpm = decode_setpm(uint32_t(parse_u64(val, ctx)));
      else if (key == "start") in.setpm.sram_start = parse_u64(val, ctx);
      else if (key == "end") in.setpm.sram_end = parse_u64(val, ctx);
      else if (key == "note") in.note = val;
      else if (key == "sram") {
        std::istringstream rs(val);
        std::string item;
        while (std::getline(rs, item, ',')) {
          if (item.size() < 3 || item[1] != ':')
            throw SimError(ctx + ": bad range '" + item + "'");
          SramTouch touch;
          touch.write = item[0] == 'w';
          size_t plus = item.find('+');
          if (plus == std::string::npos) throw SimError(ctx + ": bad range '" + item + "'");
          touch.addr = parse_u64(item.substr(2, plus - 2), ctx);
          touch.bytes = parse_u64(item.substr(plus + 1), ctx);
          in.sram.push_back(touch);
        }
      } else {
        throw SimError(ctx + ": unknown field '" + key + "'");
      }
    }
    p.instrs.push_back(std::move(in));
  }
  return p;
}

}  // namespace npupg
