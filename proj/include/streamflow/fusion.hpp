#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/converter.hpp"
#include "streamflow/graph.hpp"
#include "streamflow/tiling.hpp"

namespace streamflow {

struct FusionPlan {
  std::vector<std::vector<std::string>> groups;  // node ids per group
  std::vector<int64_t> costs;                    // bytes per group
  std::map<std::string, int> nodeToGroup;
};

nlohmann::json toJson(const FusionPlan &p);

struct FusionOptions {
  int64_t defaultFifoDepth = 2;  // tokens, budget-stage estimate only
};

/// On-chip bytes a stream implementation of this edge needs: FIFO slots at
/// the default depth, plus the converter ping-pong buffer when the
/// endpoint layouts differ.
int64_t edgeMemoryCost(const DataflowGraph &g, const FifoEdge &e,
                       const FusionOptions &opts = {});

/// Greedy fusion under the memory budget: nodes are visited in topological
/// order; each node joins the highest-indexed (nearest) predecessor group
/// that stays within cMax, else opens a new group. Writes fusionIndex per
/// node and flips intra-group edges to streams (external = false).
/// Throws when a single node's own resourceCost exceeds cMax.
FusionPlan exploreFusion(DataflowGraph &g, int64_t cMax,
                         const FusionOptions &opts = {});

/// Inserts a converter node on every stream edge whose endpoint types
/// differ, carrying the inferred ConverterSpec, an estimated profile, and
/// the buffer bytes as resourceCost.
void materializeConverters(DataflowGraph &g, const ProfileModel &model = {});

/// Merges dma_in→compute and compute→dma_out stream edges whose types
/// match exactly: the dma node disappears into the kernel (II = max,
/// D summed, T preserved).
DataflowGraph foldIdentityEdges(const DataflowGraph &g);

/// Regroups tokens on the given edges: the innermost driving dim of the
/// edge type gets elementShape × factor, tripcount ÷ factor; both endpoint
/// ports and profiles are updated consistently.
void vectorizeStreams(DataflowGraph &g,
                      const std::map<std::string, int64_t> &factorPerEdge);

}  // namespace streamflow
