#include "streamflow/sim.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

namespace streamflow {

namespace {

struct PendingPush {
  std::vector<std::pair<int, int64_t>> counts;  // (edge index, tokens)
  int64_t land;  // end-of-cycle the tokens become visible
};

struct RtEdge {
  const FifoEdge *e = nullptr;
  int64_t depth = -1;  // -1 == unbounded
  int64_t tokens = 0;    // visible (poppable) tokens
  int64_t arriving = 0;  // landed this cycle, poppable from the next one
  int64_t tokenTotal = 0;  // tokens carried over a full run
  int64_t lastRecorded = -1;
  EdgeTrace trace;
};

struct RtNode {
  const KernelNode *n = nullptr;
  int64_t firingCount = 0;  // N: total firings
  int64_t dEff = 0;
  int64_t ii = 1;
  int64_t release = 0;
  int64_t nextFiring = 0;
  int64_t earliest = 0;             // max(lastFire + II, release)
  int64_t freezeSinceFire = 0;      // output-blocked cycles since last pop
  std::deque<PendingPush> pending;
  std::vector<std::pair<int, int64_t>> ins;   // (edge index, port tokens)
  std::vector<std::pair<int, int64_t>> outs;  // (edge index, port tokens)
  bool done = false;
  NodeTrace trace;
};

// Tokens moved on firing n by a port carrying tp tokens over N firings:
// spread evenly so every port finishes together.
int64_t portCountAt(int64_t n, int64_t tp, int64_t N) {
  return (n + 1) * tp / N - n * tp / N;
}

}  // namespace

SimTrace simulate(const DataflowGraph &g, const SimConfig &cfg) {
  validateGraphOrThrow(g);
  if (cfg.horizon <= 0) throw std::invalid_argument("simulate: horizon must be positive");

  std::map<std::string, int> nodeIdx;
  std::vector<RtNode> rn(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    nodeIdx[g.nodes[i].id] = static_cast<int>(i);
    rn[i].n = &g.nodes[i];
  }
  std::vector<RtEdge> re(g.edges.size());
  for (size_t i = 0; i < g.edges.size(); ++i) {
    auto &e = g.edges[i];
    re[i].e = &e;
    re[i].tokenTotal = tokenCount(e.type);
    if (!cfg.ignoreDepths && !e.external) {
      if (!e.depth)
        throw std::invalid_argument("simulate: stream edge '" + e.id +
                                    "' has no depth");
      re[i].depth = *e.depth;
    }
    rn[nodeIdx[e.producer.node]].outs.push_back(
        {static_cast<int>(i), re[i].tokenTotal});
    rn[nodeIdx[e.consumer.node]].ins.push_back(
        {static_cast<int>(i), re[i].tokenTotal});
  }

  for (auto &r : rn) {
    if (!r.n->profile)
      throw std::invalid_argument("simulate: node '" + r.n->id +
                                  "' has no profile");
    r.ii = r.n->profile->ii;
    r.dEff = r.n->profile->delay;
    if (r.n->kind == NodeKind::DmaIn || r.n->kind == NodeKind::DmaOut)
      r.dEff += cfg.dmaLatency;
    r.firingCount = r.n->profile->tokens;
    for (auto &[ei, tp] : r.ins) r.firingCount = std::max(r.firingCount, tp);
    for (auto &[ei, tp] : r.outs) r.firingCount = std::max(r.firingCount, tp);
    if (cfg.honorStartTimes && r.n->startTime) r.release = *r.n->startTime;
    r.earliest = r.release;
  }

  auto topo = topoOrder(g);
  std::vector<int> order;
  for (auto &id : topo) order.push_back(nodeIdx[id]);

  std::set<int64_t> events;
  for (auto &r : rn) events.insert(r.release);

  SimTrace out;
  bool complete = rn.empty();
  int64_t cycle = 0;
  int64_t prevCycle = -1;

  while (!events.empty()) {
    cycle = *events.begin();
    events.erase(events.begin());
    if (cycle > cfg.horizon) {
      out.timeout = true;
      break;
    }

    // tokens landed in earlier cycles become poppable now
    if (cycle != prevCycle) {
      for (auto &e : re) {
        e.tokens += e.arriving;
        e.arriving = 0;
      }
      prevCycle = cycle;
    }

    // ---- phase A: pops (start of cycle), graph-wide before any push ----
    for (int ni : order) {
      auto &r = rn[ni];
      if (r.done || r.nextFiring >= r.firingCount) continue;
      if (cycle < r.earliest) {
        events.insert(r.earliest);
        continue;
      }
      // frozen: an output landing is overdue, the pipeline cannot advance
      if (!r.pending.empty() && r.pending.front().land < cycle) continue;
      bool starved = false;
      for (auto &[ei, tp] : r.ins) {
        int64_t need = portCountAt(r.nextFiring, tp, r.firingCount);
        if (need > 0 && re[ei].tokens < need) {
          starved = true;
          break;
        }
      }
      if (starved) continue;  // woken by the producing push's event

      // fire
      int64_t stall = cycle - r.earliest;
      int64_t freezeUsed = std::min(stall, r.freezeSinceFire);
      r.trace.inputStarved += stall - freezeUsed;
      r.freezeSinceFire = 0;
      for (auto &[ei, tp] : r.ins) {
        int64_t k = portCountAt(r.nextFiring, tp, r.firingCount);
        re[ei].tokens -= k;
        re[ei].trace.popped += k;
      }
      PendingPush push;
      push.land = cycle + r.dEff;
      for (auto &[ei, tp] : r.outs) {
        int64_t k = portCountAt(r.nextFiring, tp, r.firingCount);
        if (k > 0) push.counts.push_back({ei, k});
      }
      if (!push.counts.empty()) {
        r.pending.push_back(push);
        events.insert(push.land);
      }
      if (r.trace.start < 0) r.trace.start = cycle;
      ++r.trace.firings;
      ++r.nextFiring;
      r.earliest = cycle + r.ii;
      if (r.nextFiring < r.firingCount) events.insert(r.earliest);
      r.trace.finish = std::max(r.trace.finish, cycle + r.dEff);
    }

    // ---- phase B: pushes (end of cycle) ----
    for (int ni : order) {
      auto &r = rn[ni];
      while (!r.pending.empty() && r.pending.front().land <= cycle) {
        auto &p = r.pending.front();
        bool blocked = false;
        for (auto &[ei, k] : p.counts)
          if (re[ei].depth >= 0 &&
              re[ei].tokens + re[ei].arriving + k > re[ei].depth) {
            blocked = true;
            break;
          }
        if (blocked) break;  // retried at the next event cycle
        int64_t delay = cycle - p.land;
        if (delay > 0) {
          r.trace.outputBlocked += delay;
          r.freezeSinceFire += delay;
          // the frozen pipeline shifts every later landing with it
          for (size_t i = 1; i < r.pending.size(); ++i)
            r.pending[i].land += delay;
        }
        for (auto &[ei, k] : p.counts) {
          re[ei].arriving += k;
          re[ei].trace.pushed += k;
        }
        r.trace.finish = std::max(r.trace.finish, cycle);
        r.pending.pop_front();
        events.insert(cycle + 1);  // consumers may pop next cycle
      }
      if (!r.done && r.nextFiring >= r.firingCount && r.pending.empty())
        r.done = true;
    }

    // ---- occupancy sampling, after both phases ----
    // Zero-delay producers re-queue the current cycle; sample only once the
    // cycle has settled to keep occupancy an end-of-cycle quantity. Staged
    // arrivals physically occupy the FIFO already.
    if (events.empty() || *events.begin() > cycle) {
      for (auto &e : re) {
        int64_t occ = e.tokens + e.arriving;
        e.trace.maxOccupancy = std::max(e.trace.maxOccupancy, occ);
        if (cfg.recordOccupancy && occ != e.lastRecorded) {
          e.trace.occupancy.push_back({cycle, occ});
          e.lastRecorded = occ;
        }
      }
    }

    complete = true;
    for (auto &r : rn)
      if (!r.done) {
        complete = false;
        break;
      }
    if (complete) break;
  }

  if (!complete && !out.timeout) out.deadlock = true;

  if (out.deadlock || out.timeout) {
    for (int ni : order)
      if (!rn[ni].done) out.blockedNodes.push_back(rn[ni].n->id);
    // follow what each blocked node waits on until the chain closes
    std::vector<std::string> chain;
    std::set<int> seen;
    int cur = -1;
    for (int ni : order)
      if (!rn[ni].done) {
        cur = ni;
        break;
      }
    while (cur >= 0 && !seen.count(cur)) {
      seen.insert(cur);
      chain.push_back(rn[cur].n->id);
      auto &r = rn[cur];
      int next = -1;
      if (!r.pending.empty()) {
        for (auto &[ei, k] : r.pending.front().counts)
          if (re[ei].depth >= 0 && re[ei].tokens + k > re[ei].depth) {
            next = nodeIdx[re[ei].e->consumer.node];
            break;
          }
      }
      if (next < 0 && r.nextFiring < r.firingCount) {
        for (auto &[ei, tp] : r.ins) {
          int64_t need = portCountAt(r.nextFiring, tp, r.firingCount);
          if (need > 0 && re[ei].tokens < need) {
            next = nodeIdx[re[ei].e->producer.node];
            break;
          }
        }
      }
      cur = next;
    }
    out.waitChain = chain;
  }

  int64_t minStart = -1, maxFinish = 0;
  for (auto &r : rn) {
    out.nodes[r.n->id] = r.trace;
    if (r.trace.start >= 0) {
      if (minStart < 0 || r.trace.start < minStart) minStart = r.trace.start;
      maxFinish = std::max(maxFinish, r.trace.finish);
    }
  }
  for (auto &e : re) out.edges[e.e->id] = e.trace;
  out.totalLatency = minStart < 0 ? 0 : maxFinish - minStart;
  return out;
}

bool detectDeadlock(const SimTrace &trace) { return trace.deadlock; }

double measureOverlap(const SimTrace &trace) {
  if (trace.totalLatency <= 0) return 1.0;
  double busy = 0;
  for (auto &[id, n] : trace.nodes)
    if (n.start >= 0) busy += static_cast<double>(n.finish - n.start);
  return busy / static_cast<double>(trace.totalLatency);
}

nlohmann::json toJson(const SimTrace &t) {
  nlohmann::json nodes = nlohmann::json::object();
  for (auto &[id, n] : t.nodes)
    nodes[id] = {{"start", n.start},
                 {"finish", n.finish},
                 {"inputStarved", n.inputStarved},
                 {"outputBlocked", n.outputBlocked},
                 {"firings", n.firings}};
  nlohmann::json edges = nlohmann::json::object();
  for (auto &[id, e] : t.edges)
    edges[id] = {{"maxOccupancy", e.maxOccupancy},
                 {"pushed", e.pushed},
                 {"popped", e.popped}};
  nlohmann::json j = {{"nodes", std::move(nodes)},
                      {"edges", std::move(edges)},
                      {"totalLatency", t.totalLatency},
                      {"overlapRatio", measureOverlap(t)},
                      {"deadlock", t.deadlock},
                      {"timeout", t.timeout}};
  if (t.deadlock || t.timeout) {
    j["blockedNodes"] = t.blockedNodes;
    j["waitChain"] = t.waitChain;
  }
  return j;
}

std::string occupancyCsv(const SimTrace &t) {
  std::ostringstream os;
  os << "edge,cycle,occupancy\n";
  for (auto &[id, e] : t.edges)
    for (auto &[c, o] : e.occupancy) os << id << "," << c << "," << o << "\n";
  return os.str();
}

}  // namespace streamflow
