#include "streamflow/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "streamflow/lp.hpp"

namespace streamflow {

namespace {

int64_t floorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t ceilDiv(int64_t a, int64_t b) { return -floorDiv(-a, b); }

}  // namespace

std::string toString(SizingStrategy s) {
  return s == SizingStrategy::Normal ? "normal" : "conservative";
}

SizingStrategy sizingStrategyFromString(const std::string &s) {
  if (s == "normal") return SizingStrategy::Normal;
  if (s == "conservative") return SizingStrategy::Conservative;
  throw std::invalid_argument("unknown sizing strategy '" + s + "'");
}

int64_t TokenCurve::produced(int64_t t) const {
  if (t < startTime + delay) return 0;
  return std::min(tokens, 1 + (t - startTime - delay) / ii);
}

std::string maxTokensBranch(const KernelProfile &src, const KernelProfile &dst) {
  return src.ii <= dst.ii ? "fast-source" : "slow-source";
}

int64_t maxTokens(const KernelProfile &src, const KernelProfile &dst,
                  int64_t delay, int64_t tokens) {
  if (delay < src.delay)
    throw std::invalid_argument("maxTokens: delay must be >= source D");
  // The consumer cannot pop before the first token is visible, one cycle
  // after it lands at end of cycle D.
  int64_t effStart = std::max(delay, src.delay + 1);
  int64_t v;
  if (src.ii <= dst.ii) {
    // Source at least as fast: occupancy peaks when the source finishes.
    int64_t srcLast = src.delay + (tokens - 1) * src.ii;
    v = tokens - floorDiv(srcLast - effStart, dst.ii) - 1;
  } else {
    // Source slower: the target eventually starves; the peak is the backlog
    // accumulated before the target's first pop.
    v = ceilDiv(effStart - src.delay, src.ii);
  }
  return std::clamp<int64_t>(v, 1, tokens);
}

DataflowGraph equalize(const DataflowGraph &g, SizingStrategy strategy) {
  DataflowGraph out = g;
  if (strategy == SizingStrategy::Normal) return out;
  int64_t slowest = 0;  // max streaming time II*T across kernels
  for (auto &n : out.nodes) {
    if (!n.profile)
      throw std::invalid_argument("equalize: node '" + n.id + "' has no profile");
    slowest = std::max(slowest, n.profile->ii * n.profile->tokens);
  }
  for (auto &n : out.nodes) {
    int64_t ii = std::max<int64_t>(1, ceilDiv(slowest, n.profile->tokens));
    n.profile = makeProfile(n.profile->delay, ii, n.profile->tokens);
  }
  return out;
}

std::map<std::string, std::map<std::string, int64_t>> thresholds(
    const DataflowGraph &g) {
  std::map<std::string, std::map<std::string, int64_t>> th;
  auto order = topoOrder(g);
  // longest path from each u, edge (i,j) weighted D(i)
  for (auto &u : order) {
    std::map<std::string, int64_t> dist;
    dist[u] = 0;
    for (auto &v : order) {
      auto it = dist.find(v);
      if (it == dist.end()) continue;
      const KernelNode *n = g.findNode(v);
      int64_t d = n->profile ? n->profile->delay : 0;
      int64_t cand = it->second + d;
      for (auto *e : g.outEdges(v)) {
        if (e->external) continue;
        auto cur = dist.find(e->consumer.node);
        if (cur == dist.end() || cand > cur->second)
          dist[e->consumer.node] = cand;
      }
    }
    dist.erase(u);
    if (!dist.empty()) th[u] = std::move(dist);
  }
  return th;
}

std::map<std::string, int64_t> solveDelays(const DataflowGraph &g) {
  auto order = topoOrder(g);
  std::map<std::string, int> idx;
  for (auto &id : order) idx[id] = static_cast<int>(idx.size());
  int n = static_cast<int>(order.size());

  LinearProgram lp;
  lp.c.assign(n, 0.0);
  std::map<std::string, int> streamIndeg;
  for (auto &e : g.edges) {
    if (e.external) continue;
    const KernelNode *prod = g.findNode(e.producer.node);
    if (!prod->profile)
      throw std::invalid_argument("solveDelays: node '" + prod->id +
                                  "' has no profile");
    std::vector<double> row(n, 0.0);
    row[idx[e.consumer.node]] += 1.0;
    row[idx[e.producer.node]] -= 1.0;
    lp.a.push_back(std::move(row));
    lp.b.push_back(static_cast<double>(prod->profile->delay));
    // objective: sum of edge delays = sum_v (indeg - outdeg) * t_v
    lp.c[idx[e.consumer.node]] += 1.0;
    lp.c[idx[e.producer.node]] -= 1.0;
    ++streamIndeg[e.consumer.node];
  }
  // pin roots: t(root) <= 0 (variables are >= 0 already)
  for (auto &id : order)
    if (!streamIndeg.count(id)) {
      std::vector<double> row(n, 0.0);
      row[idx[id]] = -1.0;
      lp.a.push_back(std::move(row));
      lp.b.push_back(0.0);
    }

  auto sol = solveLp(lp);
  if (!sol) throw std::runtime_error("solveDelays: LP solver failed");

  std::map<std::string, int64_t> t;
  for (auto &id : order) t[id] = std::llround(sol->x[idx[id]]);
  // difference constraints are totally unimodular, so the optimum is
  // integral; a forward fix-up absorbs any rounding residue
  for (auto &id : order) {
    const KernelNode *nd = g.findNode(id);
    int64_t d = nd->profile ? nd->profile->delay : 0;
    for (auto *e : g.outEdges(id))
      if (!e->external)
        t[e->consumer.node] = std::max(t[e->consumer.node], t[id] + d);
  }
  return t;
}

nlohmann::json toJson(const SizingResult &r) {
  nlohmann::json edges = nlohmann::json::object();
  for (auto &[id, e] : r.edges)
    edges[id] = {{"delay", e.delay},
                 {"depth", e.depth},
                 {"formulaDepth", e.formulaDepth},
                 {"branch", e.branch}};
  return {{"strategy", toString(r.strategy)},
          {"startTime", r.startTime},
          {"actualStart", r.actualStart},
          {"edges", std::move(edges)}};
}

SizingResult sizeFifos(DataflowGraph &g, SizingStrategy strategy,
                       const SimConfig &simCfg) {
  DataflowGraph eq = equalize(g, strategy);
  for (size_t i = 0; i < g.nodes.size(); ++i)
    g.nodes[i].profile = eq.nodes[i].profile;

  SizingResult res;
  res.strategy = strategy;
  res.startTime = solveDelays(g);
  for (auto &n : g.nodes) n.startTime = res.startTime[n.id];

  SimConfig rc = simCfg;
  rc.ignoreDepths = true;
  rc.honorStartTimes = true;
  rc.recordOccupancy = false;
  SimTrace trace = simulate(g, rc);
  if (trace.deadlock || trace.timeout)
    throw std::runtime_error("sizeFifos: schedule replay did not complete");

  for (auto &[id, nt] : trace.nodes) res.actualStart[id] = nt.start;

  for (auto &e : g.edges) {
    if (e.external) continue;
    EdgeSizing s;
    s.delay = res.startTime[e.consumer.node] - res.startTime[e.producer.node];
    s.depth = std::max<int64_t>(1, trace.edges[e.id].maxOccupancy);
    const KernelNode *prod = g.findNode(e.producer.node);
    const KernelNode *cons = g.findNode(e.consumer.node);
    int64_t tEdge = tokenCount(e.type);
    if (prod->profile && cons->profile && prod->profile->tokens == tEdge &&
        cons->profile->tokens == tEdge) {
      KernelProfile sp = *prod->profile, dp = *cons->profile;
      s.branch = maxTokensBranch(sp, dp);
      s.formulaDepth = maxTokens(sp, dp, std::max(s.delay, sp.delay), tEdge);
    } else {
      s.branch = "replay";
      s.formulaDepth = s.depth;
    }
    e.depth = s.depth;
    res.edges[e.id] = s;
  }
  return res;
}

}  // namespace streamflow
