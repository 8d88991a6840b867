#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "streamflow/allocation.hpp"
#include "streamflow/fusion.hpp"
#include "streamflow/graph.hpp"
#include "streamflow/sim.hpp"
#include "streamflow/sizing.hpp"
#include "streamflow/tiling.hpp"

namespace streamflow {

struct PipelineConfig {
  int64_t cMax = 1LL << 20;  // fusion memory budget, bytes
  SizingStrategy strategy = SizingStrategy::Normal;
  ProfileModel model;
  FusionOptions fusion;
  DieSpec dies;
  BankSpec banks;  // empty classes = bank assignment skipped
  SimConfig sim;
  std::map<std::string, int64_t> vectorizeEdges;  // optional stream widening
};

struct CompileResult {
  DataflowGraph graph;
  FusionPlan fusionPlan;
  SizingResult sizing;
  DiePlan dies;
  BankAssignment banks;
  SimTrace trace;
  // memory accounting: full intermediate tensors staged in external memory
  // before fusion vs FIFO + converter bytes kept on chip after
  int64_t preFusionIntermediateBytes = 0;
  int64_t postFusionOnChipBytes = 0;
};

/// tile_and_lower → explore_fusion → materialize converters → fold
/// identity edges → optional stream vectorization → size_fifos →
/// partition_dies / assign_memory_banks → verification simulation.
CompileResult compilePipeline(const OpGraph &ops, const TileConfig &tiles,
                              const PipelineConfig &cfg);

/// Fusion, sizing, memory, and simulation summaries as one JSON document.
nlohmann::json reportJson(const CompileResult &r, const PipelineConfig &cfg);

}  // namespace streamflow
