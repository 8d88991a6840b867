#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/pipeline.hpp"
#include "streamflow/tiling.hpp"

namespace streamflow {

struct DseSpace {
  int64_t defaultTileSize = 16;
  int64_t overallUnrollSize = 1;  // total unroll budget (product)
  int trials = 8;
  double latencyWeight = 1.0;
  double memoryWeight = 0.0;
  uint64_t seed = 0;
  bool grid = false;  // full grid over the candidate lists instead of random
  std::vector<int64_t> tileCandidates = {8, 16, 32};
  std::vector<int64_t> unrollCandidates = {1, 2, 4};
};

DseSpace dseSpaceFromJson(const nlohmann::json &j);

struct UnrollResult {
  std::map<std::string, int64_t> factors;
  bool budgetRounded = false;  // budget was not a reachable power of two
};

/// Longest-latency-first unrolling: repeatedly double the factor of the
/// kernel with the highest latency estimate (halving the estimate) until
/// the product of factors reaches the budget. Ties pick the lowest current
/// factor, then the lowest id.
UnrollResult intensityAwareUnroll(
    const std::vector<std::pair<std::string, double>> &latencies,
    int64_t overallUnrollSize);

/// Stable partition: reduction loops (in original order) before parallel
/// loops (in original order). Returns the loop order, outermost first.
std::vector<int> permuteLoops(const OpNode &op);

/// Per-interface vector factor: product of unroll factors of the loops
/// driving the interface's innermost data dim, clamped to divide the tile
/// size of that loop. Entry 0..n-1 are operands, last entry the result.
std::vector<int64_t> inferVectorization(const OpNode &op,
                                        const std::vector<int64_t> &tileSizes,
                                        const std::vector<int64_t> &unrollFactors);

struct Trial {
  int index = 0;
  TileConfig config;
  bool feasible = false;
  double latency = 0;
  double memory = 0;
  double objective = 0;
  std::string error;
};

nlohmann::json toJson(const Trial &t);

struct SearchResult {
  Trial best;
  std::vector<Trial> trials;
};

/// Evaluates candidate tile configurations through the full pipeline and
/// returns the feasible one minimizing latencyWeight*latency +
/// memoryWeight*onChipBytes. Deterministic under a fixed seed. Throws
/// InfeasibleError (carrying the least-infeasible trial's error) when no
/// candidate is feasible.
SearchResult search(const OpGraph &ops, const DseSpace &space,
                    const PipelineConfig &base);

}  // namespace streamflow
