#pragma once
// Workload descriptions: operator graphs for the bundled model families,
// SRAM-aware tiling with greedy producer-consumer fusion, and demand stats.

#include <cstdint>
#include <string>
#include <vector>

#include "npupg/chip_model.hpp"

namespace npupg {

enum class OpKind : uint8_t {
  MatMul,
  Elementwise,
  Softmax,
  LayerNorm,
  EmbeddingLookup,
  Collective,
  HostDma,
};
const char* op_kind_name(OpKind k);
bool parse_op_kind(const std::string& s, OpKind* out);

enum class CollectiveKind : uint8_t { AllReduce, AllGather, ReduceScatter, AllToAll, SendRecv };
const char* collective_kind_name(CollectiveKind k);

struct Operator {
  uint32_t id = 0;
  OpKind kind = OpKind::MatMul;
  std::string label;
  std::vector<uint32_t> preds;
  uint32_t dtype_bytes = 2;

  // MatMul: out[m,n] += in[m,k] * w[k,n]
  uint64_t m = 0, n = 0, k = 0;
  // Elementwise: total elements and input operand count
  uint64_t elems = 0;
  uint32_t arity = 1;
  // Softmax / LayerNorm
  uint64_t rows = 0, cols = 0;
  // EmbeddingLookup
  uint64_t num_lookups = 0, vector_bytes = 0;
  // Collective / HostDma
  CollectiveKind coll = CollectiveKind::AllReduce;
  uint64_t bytes = 0;
  uint32_t participants = 1;
  bool host_to_device = true;
};

struct Graph {
  std::vector<Operator> ops;
  const Operator& op(uint32_t id) const { return ops.at(id); }
  std::vector<uint32_t> topo_order() const;  // throws SimError on a cycle
};

struct ParallelismSpec {
  uint32_t data = 1, tensor = 1, pipeline = 1;
};

struct ModelSpec {
  std::string family;  // llm_prefill | llm_decode | llm_train_step | dlrm_infer | synthetic
  std::string name;
  uint32_t hidden_dim = 0;
  uint32_t num_heads = 0;
  uint32_t head_dim = 0;
  uint32_t ffn_dim = 0;
  uint32_t num_layers = 1;
  uint32_t seq_len = 0;
  uint32_t batch = 1;
  uint32_t dtype_bytes = 2;
  ParallelismSpec parallelism;
  uint64_t table_bytes = 0;   // dlrm: embedding tables resident in HBM
  uint32_t num_tables = 0;    // dlrm
  std::vector<Operator> synthetic_ops;  // family == synthetic, preds as listed
};

void validate(const ModelSpec& spec);
Graph build_model_graph(const ModelSpec& spec);

std::vector<std::string> model_preset_names();
ModelSpec model_preset(const std::string& name);
ModelSpec load_model_spec(const std::string& path);
ModelSpec parse_model_spec(const std::string& text, const std::string& origin);

// Cost of one collective on this chip's interconnect, in cycles.
uint64_t collective_cycles(CollectiveKind k, uint64_t bytes, uint32_t participants,
                           const ChipConfig& chip);

struct TilePlan {
  std::vector<uint32_t> op_ids;  // anchor first; the rest execute fused on its tiles
  // MatMul anchor:
  uint64_t tile_m = 0, tile_n = 0, tile_k = 0;
  uint64_t tiles_m = 1, tiles_n = 1, tiles_k = 1;
  // Streaming anchor (elementwise-style, embedding, host DMA):
  uint64_t chunk_bytes = 0;
  uint64_t num_chunks = 1;

  uint64_t sram_demand = 0;  // peak on-chip bytes, double buffering included
  uint64_t hbm_bytes = 0;    // HBM traffic the plan moves in total
  uint64_t est_cycles = 0;   // coarse duration for pre-simulation weighting

  uint32_t anchor() const { return op_ids.front(); }
  uint64_t num_tiles() const { return tiles_m * tiles_n * tiles_k * num_chunks; }
};

struct TilingOptions {
  bool fuse = true;
};

// Greedy chain fusion, then per-group tile sizing. MatMul tiles are the
// largest power-of-two edge whose double-buffered footprint fits SRAM, never
// sized below the SA width (or the dimension, if smaller). Streaming groups
// use a chunk large enough to hide HBM latency at full bandwidth.
// Throws SimError if some group cannot fit at its minimum tile.
std::vector<TilePlan> tile_and_fuse(const Graph& g, const ChipConfig& chip,
                                    const TilingOptions& opt = {});

struct DemandBin {
  uint64_t demand_bytes = 0;
  double time_fraction = 0;
};
// Time-weighted SRAM demand distribution; weights are est_cycles unless the
// caller passes measured durations (same order as plans).
std::vector<DemandBin> sram_demand_histogram(const std::vector<TilePlan>& plans,
                                             const std::vector<uint64_t>& durations = {});

uint64_t estimate_plan_cycles(const TilePlan& plan, const Graph& g, const ChipConfig& chip);

}  // namespace npupg
