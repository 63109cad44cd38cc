#include "npupg/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "npupg/toml_lite.hpp"

namespace npupg {

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::MatMul: return "matmul";
    case OpKind::Elementwise: return "elementwise";
    case OpKind::Softmax: return "softmax";
    case OpKind::LayerNorm: return "layernorm";
    case OpKind::EmbeddingLookup: return "embedding_lookup";
    case OpKind::Collective: return "collective";
    case OpKind::HostDma: return "host_dma";
  }
  return "?";
}

bool parse_op_kind(const std::string& s, OpKind* out) {
  static const std::pair<const char*, OpKind> table[] = {
      {"matmul", OpKind::MatMul},
      {"elementwise", OpKind::Elementwise},
      {"softmax", OpKind::Softmax},
      {"layernorm", OpKind::LayerNorm},
      {"embedding_lookup", OpKind::EmbeddingLookup},
      {"collective", OpKind::Collective},
      {"host_dma", OpKind::HostDma},
  };
  for (const auto& [name, kind] : table) {
    if (s == name) {
      *out = kind;
      return true;
    }
  }
  return false;
}

const char* collective_kind_name(CollectiveKind k) {
  switch (k) {
    case CollectiveKind::AllReduce: return "all_reduce";
    case CollectiveKind::AllGather: return "all_gather";
    case CollectiveKind::ReduceScatter: return "reduce_scatter";
    case CollectiveKind::AllToAll: return "all_to_all";
    case CollectiveKind::SendRecv: return "send_recv";
  }
  return "?";
}

static bool parse_collective_kind(const std::string& s, CollectiveKind* out) {
  static const std::pair<const char*, CollectiveKind> table[] = {
      {"all_reduce", CollectiveKind::AllReduce},
      {"all_gather", CollectiveKind::AllGather},
      {"reduce_scatter", CollectiveKind::ReduceScatter},
      {"all_to_all", CollectiveKind::AllToAll},
      {"send_recv", CollectiveKind::SendRecv},
  };
  for (const auto& [name, kind] : table) {
    if (s == name) {
      *out = kind;
      return true;
    }
  }
  return false;
}

std::vector<uint32_t> Graph::topo_order() const {
  std::vector<uint32_t> indeg(ops.size(), 0);
  for (const Operator& op : ops) {
    for (uint32_t p : op.preds) {
      (void)ops.at(p);
      indeg[op.id]++;
    }
  }
  std::vector<std::vector<uint32_t>> succs(ops.size());
  for (const Operator& op : ops)
    for (uint32_t p : op.preds) succs[p].push_back(op.id);
  // Stable: among ready ops, lowest id first.
  std::vector<uint32_t> ready, order;
  for (const Operator& op : ops)
    if (indeg[op.id] == 0) ready.push_back(op.id);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    uint32_t id = ready.back();
    ready.pop_back();
    order.push_back(id);
    for (uint32_t s : succs[id])
      if (--indeg[s] == 0) ready.push_back(s);
  }
  if (order.size() != ops.size()) throw SimError("workload: operator graph has a cycle");
  return order;
}

void validate(const ModelSpec& spec) {
  auto fail = [&](const std::string& what) {
    throw ConfigError("workload: " + spec.name + ": " + what);
  };
  if (spec.dtype_bytes != 1 && spec.dtype_bytes != 2 && spec.dtype_bytes != 4)
    fail("dtype_bytes must be 1, 2, or 4");
  if (spec.parallelism.data < 1 || spec.parallelism.tensor < 1 || spec.parallelism.pipeline < 1)
    fail("parallelism degrees must be >= 1");
  const std::string& f = spec.family;
  if (f == "llm_prefill" || f == "llm_decode" || f == "llm_train_step") {
    if (!spec.hidden_dim || !spec.num_heads || !spec.head_dim || !spec.ffn_dim ||
        !spec.num_layers || !spec.seq_len || !spec.batch)
      fail("llm families need hidden_dim, num_heads, head_dim, ffn_dim, num_layers, "
           "seq_len, batch");
    if (spec.num_heads % spec.parallelism.tensor != 0)
      fail("num_heads must divide evenly across tensor-parallel shards");
    if (spec.ffn_dim % spec.parallelism.tensor != 0)
      fail("ffn_dim must divide evenly across tensor-parallel shards");
  } else if (f == "dlrm_infer") {
    if (!spec.batch || !spec.num_tables || !spec.head_dim || !spec.hidden_dim ||
        !spec.num_layers)
      fail("dlrm_infer needs batch, num_tables, head_dim, hidden_dim, num_layers");
  } else if (f == "synthetic") {
    if (spec.synthetic_ops.empty()) fail("synthetic family needs at least one op");
    for (size_t i = 0; i < spec.synthetic_ops.size(); i++)
      for (uint32_t p : spec.synthetic_ops[i].preds)
        if (p >= i) fail("synthetic op preds must reference earlier ops");
  } else {
    fail("unknown family '" + f + "'");
  }
}

namespace {

struct GraphBuilder {
  Graph g;

  uint32_t add(Operator op) {
    uint32_t id = static_cast<uint32_t>(g.ops.size());
    op.id = id;
    g.ops.push_back(std::move(op));
    return id;
  }

  uint32_t matmul(std::string label, uint64_t m, uint64_t k, uint64_t n,
                  std::vector<uint32_t> preds, uint32_t dtype) {
    Operator op;
    op.kind = OpKind::MatMul;
    op.label = std::move(label);
    op.m = m;
    op.k = k;
    op.n = n;
    op.preds = std::move(preds);
    op.dtype_bytes = dtype;
    return add(std::move(op));
  }

  uint32_t elementwise(std::string label, uint64_t elems, uint32_t arity,
                       std::vector<uint32_t> preds, uint32_t dtype) {
    Operator op;
    op.kind = OpKind::Elementwise;
    op.label = std::move(label);
    op.elems = elems;
    op.arity = arity;
    op.preds = std::move(preds);
    op.dtype_bytes = dtype;
    return add(std::move(op));
  }

  uint32_t rowwise(OpKind kind, std::string label, uint64_t rows, uint64_t cols,
                   std::vector<uint32_t> preds, uint32_t dtype) {
    Operator op;
    op.kind = kind;
    op.label = std::move(label);
    op.rows = rows;
    op.cols = cols;
    op.preds = std::move(preds);
    op.dtype_bytes = dtype;
    return add(std::move(op));
  }

  uint32_t collective(std::string label, CollectiveKind k, uint64_t bytes,
                      uint32_t participants, std::vector<uint32_t> preds, uint32_t dtype) {
    Operator op;
    op.kind = OpKind::Collective;
    op.label = std::move(label);
    op.coll = k;
    op.bytes = bytes;
    op.participants = participants;
    op.preds = std::move(preds);
    op.dtype_bytes = dtype;
    return add(std::move(op));
  }
};

// One transformer layer, tensor-parallel over heads and FFN columns
// (column-split up projections, row-split down projections, one all-reduce
// after each row-split matmul). `act_rows` is batch*seq for this pass;
// `ctx` is the attention context length.
uint32_t add_llm_layer(GraphBuilder& b, const ModelSpec& s, uint32_t layer, uint32_t input,
                       bool has_input, uint64_t act_rows, uint64_t ctx) {
  const uint32_t d = s.dtype_bytes;
  const uint32_t tp = s.parallelism.tensor;
  const uint64_t heads_tp = s.num_heads / tp;
  const uint64_t ffn_tp = s.ffn_dim / tp;
  const uint64_t H = s.hidden_dim;
  const uint64_t hd = s.head_dim;
  char tag[32];
  std::snprintf(tag, sizeof tag, "l%u.", layer);
  auto lp = [&](const char* name) { return std::string(tag) + name; };
  std::vector<uint32_t> in = has_input ? std::vector<uint32_t>{input} : std::vector<uint32_t>{};

  uint32_t ln1 = b.rowwise(OpKind::LayerNorm, lp("ln1"), act_rows, H, in, d);
  uint32_t qkv = b.matmul(lp("qkv"), act_rows, H, 3 * heads_tp * hd, {ln1}, d);
  uint32_t scores = b.matmul(lp("scores"), s.batch * heads_tp * (act_rows / s.batch), hd, ctx,
                             {qkv}, d);
  uint32_t sm = b.rowwise(OpKind::Softmax, lp("softmax"), b.g.ops[scores].m, ctx, {scores}, d);
  uint32_t attn = b.matmul(lp("context"), b.g.ops[scores].m, ctx, hd, {sm}, d);
  uint32_t proj = b.matmul(lp("proj"), act_rows, heads_tp * hd, H, {attn}, d);
  uint32_t attn_out = proj;
  if (tp > 1)
    attn_out = b.collective(lp("ar_attn"), CollectiveKind::AllReduce, act_rows * H * d, tp,
                            {proj}, d);
  std::vector<uint32_t> res1_preds{attn_out};
  if (has_input) res1_preds.push_back(input);
  uint32_t res1 = b.elementwise(lp("residual1"), act_rows * H, 2, res1_preds, d);

  uint32_t ln2 = b.rowwise(OpKind::LayerNorm, lp("ln2"), act_rows, H, {res1}, d);
  uint32_t up = b.matmul(lp("ffn_up"), act_rows, H, ffn_tp, {ln2}, d);
  uint32_t act = b.elementwise(lp("gelu"), act_rows * ffn_tp, 1, {up}, d);
  uint32_t down = b.matmul(lp("ffn_down"), act_rows, ffn_tp, H, {act}, d);
  uint32_t ffn_out = down;
  if (tp > 1)
    ffn_out = b.collective(lp("ar_ffn"), CollectiveKind::AllReduce, act_rows * H * d, tp,
                           {down}, d);
  return b.elementwise(lp("residual2"), act_rows * H, 2, {ffn_out, res1}, d);
}

// Backward of one layer, coarse: each forward matmul (M,K,N) contributes an
// input-grad matmul (M,N,K) and a weight/operand-grad matmul (K,M,N); the
// nonlinearities become extra vector passes. Grads all-reduce over data
// parallelism once per layer.
uint32_t add_llm_layer_bwd(GraphBuilder& b, const ModelSpec& s, uint32_t layer, uint32_t input,
                           uint64_t act_rows, uint64_t ctx) {
  const uint32_t d = s.dtype_bytes;
  const uint32_t tp = s.parallelism.tensor;
  const uint32_t dp = s.parallelism.data;
  const uint64_t heads_tp = s.num_heads / tp;
  const uint64_t ffn_tp = s.ffn_dim / tp;
  const uint64_t H = s.hidden_dim;
  const uint64_t hd = s.head_dim;
  const uint64_t attn_rows = s.batch * heads_tp * (act_rows / s.batch);
  char tag[32];
  std::snprintf(tag, sizeof tag, "l%u.bwd.", layer);
  auto lp = [&](const char* name) { return std::string(tag) + name; };

  uint32_t cur = input;
  auto grad_pair = [&](const char* name, uint64_t m, uint64_t k, uint64_t n) {
    cur = b.matmul(lp(name) + ".dx", m, n, k, {cur}, d);
    cur = b.matmul(lp(name) + ".dw", k, m, n, {cur}, d);
  };
  grad_pair("ffn_down", act_rows, ffn_tp, H);
  cur = b.elementwise(lp("gelu.bwd"), act_rows * ffn_tp, 2, {cur}, d);
  grad_pair("ffn_up", act_rows, H, ffn_tp);
  cur = b.elementwise(lp("ln2.bwd"), act_rows * H, 2, {cur}, d);
  grad_pair("proj", act_rows, heads_tp * hd, H);
  grad_pair("context", attn_rows, ctx, hd);
  cur = b.elementwise(lp("softmax.bwd"), attn_rows * ctx, 2, {cur}, d);
  grad_pair("scores", attn_rows, hd, ctx);
  grad_pair("qkv", act_rows, H, 3 * heads_tp * hd);
  cur = b.elementwise(lp("ln1.bwd"), act_rows * H, 2, {cur}, d);
  if (tp > 1)
    cur = b.collective(lp("ar_dx"), CollectiveKind::AllReduce, act_rows * H * d, tp, {cur}, d);
  if (dp > 1) {
    uint64_t param_bytes =
        (H * 3 * heads_tp * hd + heads_tp * hd * H + H * ffn_tp + ffn_tp * H) * uint64_t{d};
    cur = b.collective(lp("ar_grads"), CollectiveKind::AllReduce, param_bytes, dp, {cur}, d);
  }
  return cur;
}

Graph build_llm(const ModelSpec& s, bool decode, bool train) {
  GraphBuilder b;
  uint64_t act_rows = decode ? s.batch : uint64_t{s.batch} * s.seq_len;
  uint64_t ctx = s.seq_len;
  uint32_t cur = 0;
  bool has = false;
  for (uint32_t l = 0; l < s.num_layers; l++) {
    cur = add_llm_layer(b, s, l, cur, has, act_rows, ctx);
    has = true;
  }
  if (train) {
    for (uint32_t l = s.num_layers; l-- > 0;)
      cur = add_llm_layer_bwd(b, s, l, cur, act_rows, ctx);
  }
  return std::move(b.g);
}

Graph build_dlrm(const ModelSpec& s) {
  GraphBuilder b;
  const uint32_t d = s.dtype_bytes;
  const uint64_t vec_bytes = uint64_t{s.head_dim} * d;
  const uint64_t emb_width = uint64_t{s.num_tables} * s.head_dim;
  const uint32_t shards = s.parallelism.data;

  Operator dense_in;
  dense_in.kind = OpKind::HostDma;
  dense_in.label = "dense_in";
  dense_in.bytes = uint64_t{s.batch} * s.hidden_dim * d;
  dense_in.dtype_bytes = d;
  uint32_t host = b.add(std::move(dense_in));

  Operator emb;
  emb.kind = OpKind::EmbeddingLookup;
  emb.label = "emb_lookup";
  emb.num_lookups = uint64_t{s.batch} * s.num_tables;
  emb.vector_bytes = vec_bytes;
  emb.dtype_bytes = d;
  uint32_t embid = b.add(std::move(emb));

  uint32_t emb_out = embid;
  if (shards > 1)
    emb_out = b.collective("emb_exchange", CollectiveKind::AllToAll,
                           uint64_t{s.batch} * s.num_tables * vec_bytes, shards, {embid}, d);

  uint32_t cur = host;
  for (uint32_t l = 0; l < s.num_layers; l++) {
    char name[32];
    std::snprintf(name, sizeof name, "bot_mlp%u", l);
    cur = b.matmul(name, s.batch, s.hidden_dim, s.hidden_dim, {cur}, d);
    std::snprintf(name, sizeof name, "bot_relu%u", l);
    cur = b.elementwise(name, uint64_t{s.batch} * s.hidden_dim, 1, {cur}, d);
  }
  uint32_t interact = b.elementwise("interact", uint64_t{s.batch} * (emb_width + s.hidden_dim),
                                    2, {emb_out, cur}, d);
  cur = interact;
  uint64_t in_width = emb_width + s.hidden_dim;
  for (uint32_t l = 0; l < s.num_layers; l++) {
    char name[32];
    std::snprintf(name, sizeof name, "top_mlp%u", l);
    cur = b.matmul(name, s.batch, in_width, s.hidden_dim, {cur}, d);
    in_width = s.hidden_dim;
    std::snprintf(name, sizeof name, "top_relu%u", l);
    cur = b.elementwise(name, uint64_t{s.batch} * s.hidden_dim, 1, {cur}, d);
  }
  cur = b.matmul("click_head", s.batch, s.hidden_dim, 64, {cur}, d);
  b.elementwise("sigmoid", s.batch, 1, {cur}, d);
  return std::move(b.g);
}

Graph build_synthetic(const ModelSpec& s) {
  GraphBuilder b;
  for (Operator op : s.synthetic_ops) {
    if (op.dtype_bytes == 0) op.dtype_bytes = s.dtype_bytes;
    b.add(std::move(op));
  }
  return std::move(b.g);
}

}  // namespace

Graph build_model_graph(const ModelSpec& spec) {
  validate(spec);
  if (spec.family == "llm_prefill") return build_llm(spec, false, false);
  if (spec.family == "llm_decode") return build_llm(spec, true, false);
  if (spec.family == "llm_train_step") return build_llm(spec, false, true);
  if (spec.family == "dlrm_infer") return build_dlrm(spec);
  return build_synthetic(spec);
}

uint64_t collective_cycles(CollectiveKind k, uint64_t bytes, uint32_t participants,
                           const ChipConfig& chip) {
  if (participants <= 1 || bytes == 0) return 0;
  double p = participants;
  double factor = 1.0;
  switch (k) {
    case CollectiveKind::AllReduce: factor = 2.0 * (p - 1) / p; break;
    case CollectiveKind::AllGather:
    case CollectiveKind::ReduceScatter:
    case CollectiveKind::AllToAll: factor = (p - 1) / p; break;
    case CollectiveKind::SendRecv: factor = 1.0; break;
  }
  return static_cast<uint64_t>(std::ceil(bytes * factor / chip.ici_bytes_per_cycle()));
}

namespace {

bool is_vector_kind(OpKind k) {
  return k == OpKind::Elementwise || k == OpKind::Softmax || k == OpKind::LayerNorm;
}

uint32_t vu_passes(OpKind k) {
  switch (k) {
    case OpKind::Elementwise: return 1;
    case OpKind::Softmax: return 4;     // max, subtract-exp, sum, normalize
    case OpKind::LayerNorm: return 5;   // mean, var, normalize, scale, shift
    default: return 0;
  }
}

uint64_t op_elem_count(const Operator& op) {
  switch (op.kind) {
    case OpKind::MatMul: return op.m * op.n;
    case OpKind::Elementwise: return op.elems;
    case OpKind::Softmax:
    case OpKind::LayerNorm: return op.rows * op.cols;
    default: return 0;
  }
}

// Power-of-two tile edge for `dim` at scale `t`: capped by the dimension,
// floored at the SA width so tiles never starve the array.
uint64_t tile_edge(uint64_t dim, uint64_t t, uint64_t w) {
  uint64_t p2 = floor_pow2_u64(dim);
  uint64_t lo = std::min(p2, w);
  return std::max(std::min(p2, t), lo);
}

// Double-buffered SRAM bytes for a matmul tile plus its fused chain: operand
// and output tiles for the anchor, one intermediate tile per chain op, one
// extra input stream per additional chain operand.
uint64_t matmul_footprint(uint64_t tm, uint64_t tk, uint64_t tn, uint32_t d,
                          const Graph& g, const std::vector<uint32_t>& chain) {
  uint64_t f = 2 * uint64_t{d} * (tm * tk + tk * tn + tm * tn);
  for (size_t i = 1; i < chain.size(); i++) {
    const Operator& op = g.op(chain[i]);
    f += 2 * uint64_t{d} * tm * tn;  // staged intermediate
    if (op.arity > 1) f += 2 * uint64_t{d} * tm * tn * (op.arity - 1);
  }
  return f;
}

void size_matmul(TilePlan& plan, const Graph& g, const ChipConfig& chip) {
  const Operator& a = g.op(plan.anchor());
  const uint64_t w = chip.sa_width;
  uint64_t t_hi = std::max({floor_pow2_u64(a.m), floor_pow2_u64(a.k), floor_pow2_u64(a.n),
                            uint64_t{w}});
  bool placed = false;
  for (uint64_t t = t_hi; t >= w; t /= 2) {
    uint64_t tm = tile_edge(a.m, t, w);
    uint64_t tk = tile_edge(a.k, t, w);
    uint64_t tn = tile_edge(a.n, t, w);
    if (matmul_footprint(tm, tk, tn, a.dtype_bytes, g, plan.op_ids) <= chip.sram_bytes) {
      plan.tile_m = tm;
      plan.tile_n = tn;
      plan.tile_k = tk;
      placed = true;
      break;
    }
    if (t == w) break;
  }
  if (!placed)
    throw SimError("workload: minimum tile of '" + a.label + "' does not fit in " +
                   std::to_string(chip.sram_bytes) + " bytes of SRAM");
  plan.tiles_m = ceil_div_u64(a.m, plan.tile_m);
  plan.tiles_n = ceil_div_u64(a.n, plan.tile_n);
  plan.tiles_k = ceil_div_u64(a.k, plan.tile_k);
  plan.sram_demand = matmul_footprint(plan.tile_m, plan.tile_k, plan.tile_n, a.dtype_bytes, g,
                                      plan.op_ids);

  // Loop order m, n, k: operand tiles re-stream once per tile of the other
  // free dimension; the (fused) output leaves once.
  uint64_t d = a.dtype_bytes;
  plan.hbm_bytes = plan.tiles_n * (a.m * a.k * d) + plan.tiles_m * (a.k * a.n * d) +
                   a.m * a.n * d;
  for (size_t i = 1; i < plan.op_ids.size(); i++) {
    const Operator& op = g.op(plan.op_ids[i]);
    if (op.arity > 1) plan.hbm_bytes += (op.arity - 1) * a.m * a.n * d;
  }
}

void size_streaming(TilePlan& plan, const Graph& g, const ChipConfig& chip) {
  const Operator& a = g.op(plan.anchor());
  const uint64_t seg = chip.sram_segment_bytes;
  uint64_t d = a.dtype_bytes;

  uint64_t primary_bytes = 0;  // bytes of one input stream, drives chunking
  uint64_t streams = 0;        // concurrent SRAM-resident streams
  switch (a.kind) {
    case OpKind::Elementwise:
      primary_bytes = a.elems * d;
      streams = a.arity + 1;
      plan.hbm_bytes = a.elems * d * (a.arity + 1);
      break;
    case OpKind::Softmax:
    case OpKind::LayerNorm:
      primary_bytes = a.rows * a.cols * d;
      streams = 2;
      plan.hbm_bytes = 2 * a.rows * a.cols * d;
      break;
    case OpKind::EmbeddingLookup:
      primary_bytes = a.num_lookups * a.vector_bytes;
      streams = 2;
      plan.hbm_bytes = 2 * primary_bytes;
      break;
    case OpKind::Collective:
      primary_bytes = a.bytes;
      streams = 1;
      plan.hbm_bytes = 2 * a.bytes;  // stage out and back
      break;
    case OpKind::HostDma:
      primary_bytes = a.bytes;
      streams = 1;
      plan.hbm_bytes = a.bytes;
      break;
    default: break;
  }
  for (size_t i = 1; i < plan.op_ids.size(); i++) {
    const Operator& op = g.op(plan.op_ids[i]);
    streams += op.arity;  // staged intermediate plus extra operands
    if (op.arity > 1) plan.hbm_bytes += (op.arity - 1) * primary_bytes;
  }

  // Chunk big enough to keep HBM busy across its own latency.
  uint64_t hide = static_cast<uint64_t>(
      std::ceil(chip.hbm_latency_cycles * chip.hbm_bytes_per_cycle()));
  uint64_t chunk = align_up_u64(std::max(hide, seg), seg);
  chunk = std::min(chunk, align_up_u64(std::max<uint64_t>(primary_bytes, 1), seg));
  plan.chunk_bytes = chunk;
  plan.num_chunks = std::max<uint64_t>(1, ceil_div_u64(primary_bytes, chunk));
  uint64_t buffering = plan.num_chunks > 1 ? 2 : 1;
  plan.sram_demand = chunk * streams * buffering;
  if (plan.sram_demand > chip.sram_bytes)
    throw SimError("workload: streaming buffers of '" + a.label + "' do not fit in SRAM");
}

}  // namespace

uint64_t estimate_plan_cycles(const TilePlan& plan, const Graph& g, const ChipConfig& chip) {
  const Operator& a = g.op(plan.anchor());
  double best = plan.hbm_bytes / chip.hbm_bytes_per_cycle();
  double vu_elems = 0;
  for (size_t i = 1; i < plan.op_ids.size(); i++) {
    const Operator& op = g.op(plan.op_ids[i]);
    vu_elems += double(op_elem_count(op)) * vu_passes(op.kind);
  }
  switch (a.kind) {
    case OpKind::MatMul: {
      const uint64_t w = chip.sa_width;
      double blocks = double(ceil_div_u64(a.k, w)) * double(ceil_div_u64(a.n, w));
      double rows_pushed = double(a.m) * blocks;
      double weight_rows = blocks * double(w) * double(plan.tiles_m);
      best = std::max(best, (rows_pushed + weight_rows) / chip.num_sa);
      uint64_t kb = ceil_div_u64(a.k, w);
      vu_elems += double(a.m) * a.n * (kb > 1 ? kb - 1 : 0);  // partial-sum adds
      break;
    }
    case OpKind::Elementwise:
    case OpKind::Softmax:
    case OpKind::LayerNorm:
      vu_elems += double(op_elem_count(a)) * vu_passes(a.kind);
      break;
    case OpKind::Collective:
      best = std::max(best, double(collective_cycles(a.coll, a.bytes, a.participants, chip)));
      break;
    case OpKind::EmbeddingLookup:
    case OpKind::HostDma: break;
  }
  if (vu_elems > 0) {
    double vu_cy = vu_elems / (double(chip.vu_elems_per_cycle()) * chip.num_vu);
    best = std::max(best, vu_cy);
  }
  return std::max<uint64_t>(1, static_cast<uint64_t>(std::ceil(best)));
}

std::vector<TilePlan> tile_and_fuse(const Graph& g, const ChipConfig& chip,
                                    const TilingOptions& opt) {
  std::vector<uint32_t> order = g.topo_order();
  std::vector<uint32_t> succ_count(g.ops.size(), 0);
  for (const Operator& op : g.ops)
    for (uint32_t p : op.preds) succ_count[p]++;
  std::vector<uint32_t> only_succ(g.ops.size(), UINT32_MAX);
  for (const Operator& op : g.ops)
    for (uint32_t p : op.preds)
      if (succ_count[p] == 1) only_succ[p] = op.id;

  std::vector<bool> grouped(g.ops.size(), false);
  std::vector<TilePlan> plans;
  for (uint32_t id : order) {
    if (grouped[id]) continue;
    TilePlan plan;
    plan.op_ids.push_back(id);
    grouped[id] = true;
    const Operator& anchor = g.op(id);
    bool anchor_fusable = anchor.kind == OpKind::MatMul || is_vector_kind(anchor.kind);
    if (opt.fuse && anchor_fusable) {
      uint32_t tail = id;
      while (true) {
        uint32_t next = only_succ[tail];
        if (next == UINT32_MAX || grouped[next]) break;
        const Operator& cand = g.op(next);
        if (!is_vector_kind(cand.kind)) break;
        if (cand.preds.empty() || cand.preds[0] != tail) break;
        if (cand.dtype_bytes != anchor.dtype_bytes) break;
        plan.op_ids.push_back(next);
        grouped[next] = true;
        tail = next;
      }
    }
    if (anchor.kind == OpKind::MatMul)
      size_matmul(plan, g, chip);
    else
      size_streaming(plan, g, chip);
    plan.est_cycles = estimate_plan_cycles(plan, g, chip);
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<DemandBin> sram_demand_histogram(const std::vector<TilePlan>& plans,
                                             const std::vector<uint64_t>& durations) {
  if (!durations.empty() && durations.size() != plans.size())
    throw SimError("workload: histogram durations do not match plan count");
  std::map<uint64_t, double> acc;
  double total = 0;
  for (size_t i = 0; i < plans.size(); i++) {
    double w = durations.empty() ? double(plans[i].est_cycles) : double(durations[i]);
    acc[plans[i].sram_demand] += w;
    total += w;
  }
  std::vector<DemandBin> out;
  for (const auto& [demand, w] : acc)
    out.push_back({demand, total > 0 ? w / total : 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// Presets and config files.

std::vector<std::string> model_preset_names() {
  return {"llm-prefill", "llm-decode", "llm-train", "dlrm-infer", "sd-synth"};
}

ModelSpec model_preset(const std::string& name) {
  ModelSpec s;
  s.name = name;
  if (name == "llm-prefill" || name == "llm-decode" || name == "llm-train") {
    s.hidden_dim = 2048;
    s.num_heads = 16;
    s.head_dim = 128;
    s.ffn_dim = 8192;
    s.seq_len = 2048;
    s.dtype_bytes = 2;
    s.parallelism.tensor = 2;
    if (name == "llm-prefill") {
      s.family = "llm_prefill";
      s.num_layers = 2;
      s.batch = 1;
    } else if (name == "llm-decode") {
      s.family = "llm_decode";
      s.num_layers = 2;
      s.batch = 4;
    } else {
      s.family = "llm_train_step";
      s.num_layers = 1;
      s.seq_len = 1024;
      s.batch = 1;
      s.parallelism.data = 4;
    }
    return s;
  }
  if (name == "dlrm-infer") {
    s.family = "dlrm_infer";
    s.batch = 512;
    s.num_tables = 16;
    s.head_dim = 64;  // embedding vector width
    s.hidden_dim = 256;
    s.num_layers = 3;
    s.dtype_bytes = 4;
    s.parallelism.data = 8;
    s.table_bytes = uint64_t{8} << 30;
    return s;
  }
  if (name == "sd-synth") {
    // Diffusion-style attention block: 72-wide heads leave over 40% of a
    // 128-wide array's columns idle in the context matmul.
    s.family = "synthetic";
    s.dtype_bytes = 2;
    GraphBuilder b;
    uint32_t qkv = b.matmul("qkv", 4096, 320, 1080, {}, 2);
    uint32_t scores = b.matmul("scores", 20480, 72, 4096, {qkv}, 2);
    uint32_t sm = b.rowwise(OpKind::Softmax, "softmax", 20480, 4096, {scores}, 2);
    uint32_t ctx = b.matmul("context", 20480, 4096, 72, {sm}, 2);
    uint32_t proj = b.matmul("proj", 4096, 360, 320, {ctx}, 2);
    uint32_t res1 = b.elementwise("residual1", 4096 * 320, 2, {proj}, 2);
    uint32_t up = b.matmul("ffn_up", 4096, 320, 2560, {res1}, 2);
    uint32_t act = b.elementwise("geglu", 4096ull * 2560, 1, {up}, 2);
    uint32_t down = b.matmul("ffn_down", 4096, 1280, 320, {act}, 2);
    b.elementwise("residual2", 4096 * 320, 2, {down}, 2);
    s.synthetic_ops = std::move(b.g.ops);
    return s;
  }
  throw ConfigError("workload: unknown model preset '" + name + "'");
}

namespace {

std::vector<uint32_t> get_u32_array(const toml::Table& t, const std::string& key,
                                    const std::string& origin) {
  std::vector<uint32_t> out;
  auto it = t.entries.find(key);
  if (it == t.entries.end()) return out;
  if (it->second.kind != toml::Value::Kind::Array)
    throw ConfigError(origin + ": '" + key + "' must be an array of integers");
  for (const toml::Value& v : it->second.array) {
    if (v.kind != toml::Value::Kind::Int || v.i < 0)
      throw ConfigError(origin + ": '" + key + "' must be an array of non-negative integers");
    out.push_back(static_cast<uint32_t>(v.i));
  }
  return out;
}

Operator parse_synthetic_op(const toml::Table& t, size_t index, const std::string& origin) {
  Operator op;
  std::string kind_s = t.get_string("kind");
  if (!parse_op_kind(kind_s, &op.kind))
    throw ConfigError(origin + ": unknown op kind '" + kind_s + "'");
  char dflt[24];
  std::snprintf(dflt, sizeof dflt, "op%zu", index);
  op.label = t.get_string("label", dflt);
  op.preds = get_u32_array(t, "preds", origin);
  op.dtype_bytes = static_cast<uint32_t>(t.get_int("dtype_bytes", 0));
  switch (op.kind) {
    case OpKind::MatMul:
      op.m = t.get_int("m");
      op.k = t.get_int("k");
      op.n = t.get_int("n");
      break;
    case OpKind::Elementwise:
      op.elems = t.get_int("elems");
      op.arity = static_cast<uint32_t>(t.get_int("arity", 1));
      break;
    case OpKind::Softmax:
    case OpKind::LayerNorm:
      op.rows = t.get_int("rows");
      op.cols = t.get_int("cols");
      break;
    case OpKind::EmbeddingLookup:
      op.num_lookups = t.get_int("num_lookups");
      op.vector_bytes = t.get_int("vector_bytes");
      break;
    case OpKind::Collective: {
      std::string c = t.get_string("collective");
      if (!parse_collective_kind(c, &op.coll))
        throw ConfigError(origin + ": unknown collective '" + c + "'");
      op.bytes = t.get_int("bytes");
      op.participants = static_cast<uint32_t>(t.get_int("participants", 1));
      break;
    }
    case OpKind::HostDma:
      op.bytes = t.get_int("bytes");
      op.host_to_device = t.get_bool("to_device", true);
      break;
  }
  return op;
}

}  // namespace

ModelSpec parse_model_spec(const std::string& text, const std::string& origin) {
  toml::Table root = toml::parse(text, origin);
  const toml::Table* w = root.subtable("workload");
  if (!w) throw ConfigError(origin + ": missing [workload] table");
  ModelSpec s;
  if (w->has("base_preset")) s = model_preset(w->get_string("base_preset"));
  s.family = w->get_string("family", s.family);
  s.name = w->get_string("name", s.name.empty() ? origin : s.name);
  s.hidden_dim = static_cast<uint32_t>(w->get_int("hidden_dim", s.hidden_dim));
  s.num_heads = static_cast<uint32_t>(w->get_int("num_heads", s.num_heads));
  s.head_dim = static_cast<uint32_t>(w->get_int("head_dim", s.head_dim));
  s.ffn_dim = static_cast<uint32_t>(w->get_int("ffn_dim", s.ffn_dim));
  s.num_layers = static_cast<uint32_t>(w->get_int("num_layers", s.num_layers));
  s.seq_len = static_cast<uint32_t>(w->get_int("seq_len", s.seq_len));
  s.batch = static_cast<uint32_t>(w->get_int("batch", s.batch));
  s.dtype_bytes = static_cast<uint32_t>(w->get_int("dtype_bytes", s.dtype_bytes));
  s.table_bytes = static_cast<uint64_t>(w->get_int("table_bytes", s.table_bytes));
  s.num_tables = static_cast<uint32_t>(w->get_int("num_tables", s.num_tables));
  if (const toml::Table* p = w->subtable("parallelism")) {
    s.parallelism.data = static_cast<uint32_t>(p->get_int("data", s.parallelism.data));
    s.parallelism.tensor = static_cast<uint32_t>(p->get_int("tensor", s.parallelism.tensor));
    s.parallelism.pipeline =
        static_cast<uint32_t>(p->get_int("pipeline", s.parallelism.pipeline));
  }
  auto ops_it = w->table_arrays.find("ops");
  if (ops_it != w->table_arrays.end()) {
    s.synthetic_ops.clear();
    for (size_t i = 0; i < ops_it->second.size(); i++) {
      Operator op = parse_synthetic_op(ops_it->second[i], i, origin);
      op.id = static_cast<uint32_t>(i);
      s.synthetic_ops.push_back(std::move(op));
    }
  }
  validate(s);
  return s;
}

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("workload: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_spec(ss.str(), path);
}

}  // namespace npupg
