#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/graph.hpp"

namespace streamflow {

enum class OpTemplate {
  Matmul,
  ElementwiseUnary,
  ElementwiseBinary,
  Reduction,  // reduces the last data dimension
  Transpose,
};

std::string toString(OpTemplate t);
OpTemplate opTemplateFromString(const std::string &s);

struct OpLoop {
  std::string name;
  int64_t tripcount = 1;
  bool reduction = false;
};

/// One tensor operation in the frontend graph. Loops and per-operand loop
/// indexing are derived from the template and shapes.
struct OpNode {
  std::string id;
  OpTemplate opTemplate = OpTemplate::ElementwiseUnary;
  std::vector<std::vector<int64_t>> operandShapes;
  std::vector<int64_t> resultShape;
  // producer op id per operand; nullopt = graph input from external memory
  std::vector<std::optional<std::string>> inputs;

  // derived
  std::vector<OpLoop> loops;
  std::vector<std::vector<int>> operandLoops;  // per operand: loop per dim
  std::vector<int> resultLoops;
};

struct OpGraph {
  std::vector<OpNode> ops;
  ElementKind elementKind;
};

/// Fills the derived loop structure and checks template/shape consistency.
void deriveLoops(OpNode &op);
std::optional<Violation> validateOpGraph(const OpGraph &g);

OpGraph opGraphFromJson(const nlohmann::json &j);
nlohmann::json toJson(const OpGraph &g);

struct OpTileConfig {
  std::vector<int64_t> tileSizes;      // per loop, canonical loop order
  std::vector<int> loopOrder;          // permutation, outermost first
  std::vector<int64_t> unrollFactors;  // per loop
};

struct TileConfig {
  int64_t defaultTileSize = 16;
  std::map<std::string, OpTileConfig> perOp;  // missing ops use defaults

  OpTileConfig resolved(const OpNode &op) const;
};

TileConfig tileConfigFromJson(const nlohmann::json &j);
nlohmann::json toJson(const TileConfig &c);

/// Analytic stand-in for vendor profiling, plus verbatim per-node overrides.
struct ProfileModel {
  int64_t pipeDepth = 4;   // additive pipeline depth in D
  int64_t busBytes = 64;   // external memory bus width for dma nodes
  int64_t dmaLatency = 0;  // extra fixed latency for dma nodes
  std::map<std::string, KernelProfile> overrides;  // by node id
};

ProfileModel profileModelFromJson(const nlohmann::json &j);

/// II = ceil(work per firing / unroll), D = II + pipeDepth, T from the
/// node's ports; override entries win verbatim.
KernelProfile estimateProfile(const KernelNode &node, int64_t workPerFiring,
                              int64_t unroll, const ProfileModel &model);

/// Lowers each op to a compute kernel whose interface types encode the
/// tiled loop nest, with dma_in/dma_out at the graph boundary. All
/// inter-node edges start external (memory-routed); fusion later promotes
/// them to streams.
DataflowGraph tileAndLower(const OpGraph &ops, const TileConfig &cfg,
                           const ProfileModel &model = {});

struct PackedLayout {
  std::vector<int64_t> originalShape;
  std::vector<int64_t> tileSizes;
  std::vector<int64_t> packedShape;  // outer tile counts ++ inner extents
  int64_t vectorGroup = 1;           // scalars per bus word
  std::vector<int64_t> wordShape;    // optional inner word extents
};

nlohmann::json toJson(const PackedLayout &l);

/// Tiled blocked layout per the widened-bus packing scheme. When wordShape
/// is given, the inner tile is further split into words of that shape and
/// packedShape counts words.
PackedLayout pack(const std::vector<int64_t> &shape,
                  const std::vector<int64_t> &tileSizes,
                  const ElementKind &kind, int64_t busBits,
                  const std::vector<int64_t> &wordShape = {});

/// Bijective position map: flat row-major original index -> (word, lane).
std::pair<int64_t, int64_t> packIndex(const PackedLayout &l,
                                      const std::vector<int64_t> &index);

/// Reorders little-endian scalars of a row-major tensor into packed order.
std::vector<uint8_t> packBytes(const PackedLayout &l, const ElementKind &kind,
                               const std::vector<uint8_t> &raw);

}  // namespace streamflow
