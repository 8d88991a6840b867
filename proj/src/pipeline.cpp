#include "streamflow/pipeline.hpp"

#include <stdexcept>

namespace streamflow {

CompileResult compilePipeline(const OpGraph &ops, const TileConfig &tiles,
                              const PipelineConfig &cfg) {
  CompileResult r;
  r.graph = tileAndLower(ops, tiles, cfg.model);

  // baseline: every kernel-to-kernel intermediate staged as a full tensor
  // in external memory
  for (auto &e : r.graph.edges) {
    const KernelNode *prod = r.graph.findNode(e.producer.node);
    const KernelNode *cons = r.graph.findNode(e.consumer.node);
    if (prod->kind == NodeKind::Compute && cons->kind == NodeKind::Compute)
      r.preFusionIntermediateBytes += e.type.tensorBytes();
  }

  r.fusionPlan = exploreFusion(r.graph, cfg.cMax, cfg.fusion);
  materializeConverters(r.graph, cfg.model);
  r.graph = foldIdentityEdges(r.graph);
  if (!cfg.vectorizeEdges.empty())
    vectorizeStreams(r.graph, cfg.vectorizeEdges);

  r.sizing = sizeFifos(r.graph, cfg.strategy, cfg.sim);

  // on-chip bytes after fusion: sized FIFO slots plus converter buffers
  for (auto &e : r.graph.edges)
    if (!e.external && e.depth)
      r.postFusionOnChipBytes += *e.depth * e.type.tokenBytes();
  for (auto &n : r.graph.nodes)
    if (n.converter) r.postFusionOnChipBytes += n.converter->byteCost;

  r.dies = partitionDies(r.graph, cfg.dies);

  if (!cfg.banks.classes.empty()) {
    std::vector<Buffer> buffers;
    for (auto &n : r.graph.nodes)
      if (n.resourceCost > 0) buffers.push_back({n.id, n.resourceCost});
    for (auto &e : r.graph.edges)
      if (!e.external && e.depth)
        buffers.push_back({e.id, *e.depth * e.type.tokenBytes()});
    r.banks = assignMemoryBanks(buffers, cfg.banks);
  }

  r.trace = simulate(r.graph, cfg.sim);
  return r;
}

nlohmann::json reportJson(const CompileResult &r, const PipelineConfig &cfg) {
  double ratio =
      r.preFusionIntermediateBytes > 0
          ? static_cast<double>(r.postFusionOnChipBytes) /
                static_cast<double>(r.preFusionIntermediateBytes)
          : 0.0;
  nlohmann::json j = {
      {"fusion", toJson(r.fusionPlan)},
      {"sizing", toJson(r.sizing)},
      {"dies", toJson(r.dies)},
      {"memory",
       {{"preFusionIntermediateBytes", r.preFusionIntermediateBytes},
        {"postFusionOnChipBytes", r.postFusionOnChipBytes},
        {"onChipRatio", ratio}}},
      {"simulation", toJson(r.trace)},
      {"cMax", cfg.cMax},
      {"strategy", toString(cfg.strategy)},
  };
  if (!cfg.banks.classes.empty()) j["banks"] = toJson(r.banks, cfg.banks);
  return j;
}

}  // namespace streamflow
