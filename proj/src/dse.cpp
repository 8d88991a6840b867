#include "streamflow/dse.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace streamflow {

DseSpace dseSpaceFromJson(const nlohmann::json &j) {
  DseSpace s;
  s.defaultTileSize = j.value("defaultTileSize", s.defaultTileSize);
  s.overallUnrollSize = j.value("overallUnrollSize", s.overallUnrollSize);
  s.trials = j.value("trials", s.trials);
  s.latencyWeight = j.value("latencyWeight", s.latencyWeight);
  s.memoryWeight = j.value("memoryWeight", s.memoryWeight);
  s.seed = j.value("seed", s.seed);
  s.grid = j.value("grid", s.grid);
  if (j.contains("tileCandidates"))
    s.tileCandidates = j["tileCandidates"].get<std::vector<int64_t>>();
  if (j.contains("unrollCandidates"))
    s.unrollCandidates = j["unrollCandidates"].get<std::vector<int64_t>>();
  return s;
}

UnrollResult intensityAwareUnroll(
    const std::vector<std::pair<std::string, double>> &latencies,
    int64_t overallUnrollSize) {
  if (overallUnrollSize < 1)
    throw std::invalid_argument("intensityAwareUnroll: budget must be >= 1");
  struct Entry {
    std::string id;
    double latency;
    int64_t factor = 1;
  };
  std::vector<Entry> heap;
  for (auto &[id, lat] : latencies) {
    if (lat <= 0)
      throw std::invalid_argument("intensityAwareUnroll: latencies must be positive");
    heap.push_back({id, lat});
  }
  UnrollResult res;
  int64_t product = 1;
  while (!heap.empty() && product * 2 <= overallUnrollSize) {
    // max latency; ties -> lowest current factor, then lowest id
    size_t pick = 0;
    for (size_t i = 1; i < heap.size(); ++i) {
      auto &a = heap[i], &b = heap[pick];
      if (a.latency > b.latency ||
          (a.latency == b.latency &&
           (a.factor < b.factor ||
            (a.factor == b.factor && a.id < b.id))))
        pick = i;
    }
    heap[pick].factor *= 2;
    heap[pick].latency /= 2;
    product *= 2;
  }
  res.budgetRounded = product != overallUnrollSize;
  for (auto &e : heap) res.factors[e.id] = e.factor;
  return res;
}

std::vector<int> permuteLoops(const OpNode &op) {
  std::vector<int> order;
  for (size_t l = 0; l < op.loops.size(); ++l)
    if (op.loops[l].reduction) order.push_back(static_cast<int>(l));
  for (size_t l = 0; l < op.loops.size(); ++l)
    if (!op.loops[l].reduction) order.push_back(static_cast<int>(l));
  return order;
}

std::vector<int64_t> inferVectorization(const OpNode &op,
                                        const std::vector<int64_t> &tileSizes,
                                        const std::vector<int64_t> &unrollFactors) {
  if (tileSizes.size() != op.loops.size() ||
      unrollFactors.size() != op.loops.size())
    throw std::invalid_argument("inferVectorization: per-loop arity mismatch");
  auto factorFor = [&](const std::vector<int> &loopOfDim) -> int64_t {
    int l = loopOfDim.back();  // driver of the innermost data dim
    int64_t f = unrollFactors[l];
    while (f > 1 && tileSizes[l] % f != 0) --f;  // clamp to a tile divisor
    return std::max<int64_t>(1, f);
  };
  std::vector<int64_t> out;
  for (auto &loops : op.operandLoops) out.push_back(factorFor(loops));
  out.push_back(factorFor(op.resultLoops));
  return out;
}

nlohmann::json toJson(const Trial &t) {
  return {{"index", t.index},     {"config", toJson(t.config)},
          {"feasible", t.feasible}, {"latency", t.latency},
          {"memory", t.memory},   {"objective", t.objective},
          {"error", t.error}};
}

namespace {

TileConfig buildConfig(const OpGraph &ops, int64_t tileSize,
                       int64_t unrollBudget) {
  TileConfig cfg;
  cfg.defaultTileSize = tileSize;
  // latency estimate: total scalar work at unroll 1
  std::vector<std::pair<std::string, double>> latencies;
  for (auto &op : ops.ops) {
    double work = 1;
    for (auto &l : op.loops) work *= static_cast<double>(l.tripcount);
    latencies.push_back({op.id, work});
  }
  auto unroll = intensityAwareUnroll(latencies, unrollBudget);
  for (auto &op : ops.ops) {
    OpTileConfig oc;
    for (auto &l : op.loops) {
      int64_t t = std::min(tileSize, l.tripcount);
      while (l.tripcount % t != 0) --t;
      oc.tileSizes.push_back(t);
    }
    oc.loopOrder = permuteLoops(op);
    oc.unrollFactors.assign(op.loops.size(), 1);
    // apply the kernel's factor on its innermost parallel loop, clamped to
    // a divisor of that loop's tile size
    int target = -1;
    for (int l = static_cast<int>(op.loops.size()) - 1; l >= 0; --l)
      if (!op.loops[l].reduction) {
        target = l;
        break;
      }
    if (target < 0) target = static_cast<int>(op.loops.size()) - 1;
    int64_t f = unroll.factors[op.id];
    while (f > 1 && oc.tileSizes[target] % f != 0) f /= 2;
    oc.unrollFactors[target] = std::max<int64_t>(1, f);
    cfg.perOp[op.id] = std::move(oc);
  }
  return cfg;
}

}  // namespace

SearchResult search(const OpGraph &ops, const DseSpace &space,
                    const PipelineConfig &base) {
  if (space.trials < 1)
    throw std::invalid_argument("search: trial budget must be >= 1");

  std::vector<std::pair<int64_t, int64_t>> candidates;  // (tile, unroll)
  if (space.grid) {
    for (int64_t t : space.tileCandidates)
      for (int64_t u : space.unrollCandidates) candidates.push_back({t, u});
  } else {
    std::mt19937_64 rng(space.seed);
    for (int i = 0; i < space.trials; ++i)
      candidates.push_back(
          {space.tileCandidates[rng() % space.tileCandidates.size()],
           space.unrollCandidates[rng() % space.unrollCandidates.size()]});
  }

  SearchResult res;
  int bestIdx = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    Trial t;
    t.index = static_cast<int>(i);
    try {
      t.config = buildConfig(ops, candidates[i].first, candidates[i].second);
      CompileResult cr = compilePipeline(ops, t.config, base);
      if (cr.trace.deadlock || cr.trace.timeout)
        throw std::runtime_error("simulation did not complete");
      t.feasible = true;
      t.latency = static_cast<double>(cr.trace.totalLatency);
      t.memory = static_cast<double>(cr.postFusionOnChipBytes);
      t.objective =
          space.latencyWeight * t.latency + space.memoryWeight * t.memory;
    } catch (const std::exception &ex) {
      t.feasible = false;
      t.error = ex.what();
    }
    res.trials.push_back(t);
    if (t.feasible &&
        (bestIdx < 0 || t.objective < res.trials[bestIdx].objective))
      bestIdx = static_cast<int>(i);
  }
  if (bestIdx < 0)
    throw InfeasibleError("search: no feasible candidate; first failure: " +
                          (res.trials.empty() ? std::string("none")
                                              : res.trials[0].error));
  res.best = res.trials[bestIdx];
  return res;
}

}  // namespace streamflow
