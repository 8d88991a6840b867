#include "streamflow/fusion.hpp"

#include <algorithm>
#include <stdexcept>

namespace streamflow {

nlohmann::json toJson(const FusionPlan &p) {
  return {{"groups", p.groups},
          {"costs", p.costs},
          {"nodeToGroup", p.nodeToGroup}};
}

int64_t edgeMemoryCost(const DataflowGraph &g, const FifoEdge &e,
                       const FusionOptions &opts) {
  if (opts.defaultFifoDepth < 1)
    throw std::invalid_argument("edgeMemoryCost: depth must be >= 1");
  const KernelNode *prod = g.findNode(e.producer.node);
  const KernelNode *cons = g.findNode(e.consumer.node);
  const ITensorType &src = prod->outPorts.at(e.producer.port);
  const ITensorType &dst = cons->inPorts.at(e.consumer.port);
  int64_t cost = opts.defaultFifoDepth * src.tokenBytes();
  if (!typesMatch(src, dst)) cost += inferConverter(src, dst).byteCost;
  return cost;
}

FusionPlan exploreFusion(DataflowGraph &g, int64_t cMax,
                         const FusionOptions &opts) {
  validateGraphOrThrow(g);
  FusionPlan plan;
  for (auto &id : topoOrder(g)) {
    KernelNode *node = g.findNode(id);
    if (node->resourceCost > cMax)
      throw InfeasibleError(
          "exploreFusion: node '" + id + "' alone exceeds the memory budget (" +
          std::to_string(node->resourceCost) + " > " + std::to_string(cMax) +
          "); refine its tiling");
    // candidate groups: predecessors' groups, edge costs accumulated
    std::map<int, int64_t> cand;
    for (auto *e : g.inEdges(id)) {
      auto it = plan.nodeToGroup.find(e->producer.node);
      if (it == plan.nodeToGroup.end()) continue;
      cand[it->second] += edgeMemoryCost(g, *e, opts);
    }
    int chosen = -1;
    for (auto it = cand.rbegin(); it != cand.rend(); ++it) {
      int gi = it->first;
      if (plan.costs[gi] + it->second + node->resourceCost <= cMax) {
        chosen = gi;
        break;  // highest index == nearest group wins
      }
    }
    if (chosen >= 0) {
      plan.groups[chosen].push_back(id);
      plan.costs[chosen] += cand[chosen] + node->resourceCost;
    } else {
      chosen = static_cast<int>(plan.groups.size());
      plan.groups.push_back({id});
      plan.costs.push_back(node->resourceCost);
    }
    plan.nodeToGroup[id] = chosen;
    node->fusionIndex = chosen;
  }
  for (auto &e : g.edges)
    e.external =
        plan.nodeToGroup[e.producer.node] != plan.nodeToGroup[e.consumer.node];
  return plan;
}

void materializeConverters(DataflowGraph &g, const ProfileModel &model) {
  std::vector<FifoEdge> newEdges;
  for (auto &e : g.edges) {
    KernelNode *prod = g.findNode(e.producer.node);
    KernelNode *cons = g.findNode(e.consumer.node);
    const ITensorType src = prod->outPorts.at(e.producer.port);
    const ITensorType dst = cons->inPorts.at(e.consumer.port);
    if (e.external || typesMatch(src, dst)) continue;

    KernelNode conv;
    conv.id = e.id + "_conv";
    conv.kind = NodeKind::Converter;
    conv.inPorts = {src};
    conv.outPorts = {dst};
    conv.converter = inferConverter(src, dst);
    conv.resourceCost = conv.converter->byteCost;
    conv.fusionIndex = prod->fusionIndex;
    // the drain side can only start once a shared-loop group is buffered
    int64_t groups = 1;
    for (int64_t tc : conv.converter->sharedLoopTripcounts) groups *= tc;
    int64_t fill = tokenCount(src) / std::max<int64_t>(1, groups);
    conv.profile = makeProfile(fill + model.pipeDepth, 1,
                               std::max(tokenCount(src), tokenCount(dst)));

    FifoEdge toConv;
    toConv.id = e.id + "_a";
    toConv.producer = e.producer;
    toConv.consumer = {conv.id, 0};
    toConv.type = src;
    toConv.external = false;

    e.id = e.id + "_b";
    e.producer = {conv.id, 0};
    e.type = dst;

    g.nodes.push_back(std::move(conv));
    newEdges.push_back(std::move(toConv));
  }
  for (auto &e : newEdges) g.edges.push_back(std::move(e));
  validateGraphOrThrow(g);
}

DataflowGraph foldIdentityEdges(const DataflowGraph &gIn) {
  DataflowGraph g = gIn;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto &e : g.edges) {
      if (e.external) continue;
      KernelNode *prod = g.findNode(e.producer.node);
      KernelNode *cons = g.findNode(e.consumer.node);
      bool inFold = prod->kind == NodeKind::DmaIn &&
                    cons->kind == NodeKind::Compute &&
                    g.outEdges(prod->id).size() == 1;
      bool outFold = prod->kind == NodeKind::Compute &&
                     cons->kind == NodeKind::DmaOut;
      if (!inFold && !outFold) continue;
      const ITensorType &src = prod->outPorts.at(e.producer.port);
      const ITensorType &dst = cons->inPorts.at(e.consumer.port);
      if (!typesMatch(src, dst)) continue;

      KernelNode *keep = inFold ? cons : prod;
      KernelNode *gone = inFold ? prod : cons;
      if (keep->profile && gone->profile)
        keep->profile = makeProfile(
            keep->profile->delay + gone->profile->delay,
            std::max(keep->profile->ii, gone->profile->ii),
            keep->profile->tokens);
      keep->resourceCost += gone->resourceCost;

      std::string goneId = gone->id;
      std::string edgeId = e.id;
      std::erase_if(g.edges, [&](const FifoEdge &x) { return x.id == edgeId; });
      std::erase_if(g.nodes,
                    [&](const KernelNode &x) { return x.id == goneId; });
      changed = true;
      break;  // iterators invalidated; rescan
    }
  }
  validateGraphOrThrow(g);
  return g;
}

namespace {

// Innermost iteration level of t that drives a data dim, and that dim.
int innermostDrivenDim(const ITensorType &t) {
  for (int level = t.iterRank() - 1; level >= 0; --level) {
    int d = t.drivenDim(level);
    if (d >= 0) return d;
  }
  throw std::invalid_argument("vectorizeStreams: type drives no data dim");
}

}  // namespace

void vectorizeStreams(DataflowGraph &g,
                      const std::map<std::string, int64_t> &factorPerEdge) {
  for (auto &[edgeId, factor] : factorPerEdge) {
    if (factor < 1)
      throw std::invalid_argument("vectorizeStreams: factor must be >= 1");
    if (factor == 1) continue;
    FifoEdge *e = g.findEdge(edgeId);
    if (!e) throw std::invalid_argument("vectorizeStreams: no edge '" + edgeId + "'");
    KernelNode *prod = g.findNode(e->producer.node);
    KernelNode *cons = g.findNode(e->consumer.node);

    auto widen = [&](const ITensorType &t) {
      std::vector<int64_t> factors(t.rank(), 1);
      factors[innermostDrivenDim(t)] = factor;
      return vectorizeType(t, factors);
    };
    prod->outPorts.at(e->producer.port) = widen(prod->outPorts.at(e->producer.port));
    cons->inPorts.at(e->consumer.port) = widen(cons->inPorts.at(e->consumer.port));
    e->type = widen(e->type);

    auto refreshTokens = [](KernelNode *n) {
      if (!n->profile) return;
      int64_t t = 0;
      for (auto &p : n->inPorts) t = std::max(t, tokenCount(p));
      for (auto &p : n->outPorts) t = std::max(t, tokenCount(p));
      if (t > 0)
        n->profile = makeProfile(n->profile->delay, n->profile->ii, t);
    };
    refreshTokens(prod);
    refreshTokens(cons);
  }
  validateGraphOrThrow(g);
}

}  // namespace streamflow
