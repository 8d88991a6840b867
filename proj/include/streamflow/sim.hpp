#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/graph.hpp"

namespace streamflow {

struct SimConfig {
  int64_t horizon = 10'000'000;   // max cycles before reporting timeout
  bool recordOccupancy = false;   // keep per-edge occupancy time series
  int64_t dmaLatency = 0;         // extra cycles per token for dma nodes
  bool ignoreDepths = false;      // treat every FIFO as unbounded
  bool honorStartTimes = true;    // node startTime acts as a release time
};

struct NodeTrace {
  int64_t start = -1;            // cycle of first firing
  int64_t finish = -1;           // cycle the last output token lands
  int64_t inputStarved = 0;      // stall cycles waiting on empty inputs
  int64_t outputBlocked = 0;     // stall cycles waiting on full outputs
  int64_t firings = 0;
};

struct EdgeTrace {
  int64_t maxOccupancy = 0;      // peak tokens resident, end-of-cycle
  int64_t pushed = 0;
  int64_t popped = 0;
  // (cycle, occupancy) at every change, when recording is enabled
  std::vector<std::pair<int64_t, int64_t>> occupancy;
};

struct SimTrace {
  std::map<std::string, NodeTrace> nodes;
  std::map<std::string, EdgeTrace> edges;
  int64_t totalLatency = 0;      // max finish - min start
  bool deadlock = false;
  bool timeout = false;
  std::vector<std::string> blockedNodes;  // unfinished nodes at deadlock
  std::vector<std::string> waitChain;     // node ids along a waiting cycle
};

/// Cycle-resolved token simulation. Per firing, input pops happen at the
/// start of the firing cycle (pops before pushes, graph-wide); output tokens
/// land at end-of-cycle D later. A landing blocked by a full FIFO freezes
/// the kernel pipeline until the consumer frees a slot. Occupancy is
/// sampled after each cycle's pops and pushes.
SimTrace simulate(const DataflowGraph &g, const SimConfig &cfg = {});

/// True iff the trace ended with mutually waiting nodes; the wait chain
/// lists a cycle of blocked dependencies.
bool detectDeadlock(const SimTrace &trace);

/// Sum of per-kernel busy spans over total latency; > 1 means pipelined
/// execution overlapped kernels in time.
double measureOverlap(const SimTrace &trace);

nlohmann::json toJson(const SimTrace &trace);

/// Per-edge occupancy series as CSV: edge,cycle,occupancy.
std::string occupancyCsv(const SimTrace &trace);

}  // namespace streamflow
