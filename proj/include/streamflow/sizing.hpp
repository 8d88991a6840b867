#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "streamflow/graph.hpp"
#include "streamflow/sim.hpp"

namespace streamflow {

enum class SizingStrategy { Normal, Conservative };

std::string toString(SizingStrategy s);
SizingStrategy sizingStrategyFromString(const std::string &s);

/// Piecewise-linear token production curve of a pipelined kernel.
struct TokenCurve {
  int64_t startTime = 0;
  int64_t delay = 0;  // D
  int64_t ii = 1;
  int64_t tokens = 1;  // T

  /// Tokens produced by end of cycle t (non-decreasing, saturates at T).
  int64_t produced(int64_t t) const;
};

/// Peak tokens resident in the FIFO of a two-kernel chain where the
/// consumer starts `delay` cycles after the producer. Matches the
/// simulator exactly under the pinned cycle convention (pops at start of
/// cycle, pushes at end of cycle D later, occupancy sampled after both).
/// Throws if delay < src.delay.
int64_t maxTokens(const KernelProfile &src, const KernelProfile &dst,
                  int64_t delay, int64_t tokens);

/// Which closed-form branch maxTokens used: "fast-source" when the source
/// rate is at least the target rate, "slow-source" otherwise.
std::string maxTokensBranch(const KernelProfile &src, const KernelProfile &dst);

/// Normal: profiles unchanged. Conservative: every kernel's II is raised so
/// all token rates match the slowest kernel's; L is recomputed.
DataflowGraph equalize(const DataflowGraph &g, SizingStrategy strategy);

/// Longest-path lower bounds: threshold[u][v] = max over u→v paths of the
/// sum of D(i) along edges (i,j). Only reachable pairs appear.
std::map<std::string, std::map<std::string, int64_t>> thresholds(
    const DataflowGraph &g);

/// Minimal start-time schedule: per-node t(v) with t(j) − t(i) ≥ D(i) per
/// stream edge, roots pinned to 0, minimizing the sum of edge delays.
/// Solutions are integral.
std::map<std::string, int64_t> solveDelays(const DataflowGraph &g);

struct EdgeSizing {
  int64_t delay = 0;         // t(consumer) − t(producer)
  int64_t depth = 1;         // tokens, ≥ 1, from the schedule replay
  int64_t formulaDepth = 0;  // closed-form value (chains; reporting)
  std::string branch;        // "fast-source" | "slow-source" | "replay"
};

struct SizingResult {
  SizingStrategy strategy = SizingStrategy::Normal;
  std::map<std::string, int64_t> startTime;    // LP schedule per node
  std::map<std::string, int64_t> actualStart;  // first firing in replay
  std::map<std::string, EdgeSizing> edges;     // per stream edge
};

nlohmann::json toJson(const SizingResult &r);

/// equalize → solveDelays → unbounded replay with the scheduled release
/// times; each stream edge's depth is its peak replay occupancy (≥ 1).
/// Writes depth, startTime, and equalized profiles back into g.
SizingResult sizeFifos(DataflowGraph &g, SizingStrategy strategy,
                       const SimConfig &simCfg = {});

}  // namespace streamflow
