// Shared helpers for the unit and acceptance suites: random itensor views
// over a common tensor, and random layered DAGs with pipeline profiles.
#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "streamflow/graph.hpp"
#include "streamflow/itensor.hpp"

namespace testsupport {

// A random stream view of `shape`: random per-dim tiling, random loop order,
// optionally one re-iteration level spliced in.
inline streamflow::ITensorType randomView(std::mt19937_64 &rng,
                                          const std::vector<int64_t> &shape) {
  auto pickTile = [&](int64_t extent) {
    std::vector<int64_t> divs;
    for (int64_t d = 1; d <= extent; ++d)
      if (extent % d == 0) divs.push_back(d);
    return divs[rng() % divs.size()];
  };
  int rank = static_cast<int>(shape.size());
  streamflow::ITensorType t;
  t.dataShape = shape;
  t.elementShape.resize(rank);
  std::vector<int64_t> trips(rank);
  for (int d = 0; d < rank; ++d) {
    t.elementShape[d] = pickTile(shape[d]);
    trips[d] = shape[d] / t.elementShape[d];
  }
  std::vector<int> perm(rank);
  for (int d = 0; d < rank; ++d) perm[d] = d;
  std::shuffle(perm.begin(), perm.end(), rng);
  int reiterAt = static_cast<int>(rng() % (rank + 2));
  t.iterTripcounts.clear();
  t.iterSteps.clear();
  t.dimSource.assign(rank, -1);
  int p = 0;
  int levels = rank + (reiterAt <= rank ? 1 : 0);
  for (int lv = 0; lv < levels; ++lv) {
    if (lv == reiterAt) {
      t.iterTripcounts.push_back(1 + rng() % 3);
      t.iterSteps.push_back(1);
      continue;
    }
    int d = perm[p++];
    t.iterTripcounts.push_back(trips[d]);
    t.iterSteps.push_back(t.elementShape[d]);
    t.dimSource[d] = static_cast<int>(t.iterTripcounts.size()) - 1;
  }
  streamflow::validateOrThrow(t);
  return t;
}

// All nodes share one itensor type so every edge is a plain stream; profiles
// share T (all firing counts equal) with random D and II.
inline streamflow::DataflowGraph randomDag(std::mt19937_64 &rng, int maxNodes,
                                           int64_t tokens) {
  using namespace streamflow;
  ITensorType ty;
  ty.dataShape = {tokens, 4};
  ty.elementShape = {1, 4};
  ty.iterTripcounts = {tokens, 1};
  ty.iterSteps = {1, 4};
  ty.dimSource = {0, 1};

  int n = 2 + static_cast<int>(rng() % std::max(1, maxNodes - 1));
  DataflowGraph g;
  for (int i = 0; i < n; ++i) {
    KernelNode k;
    k.id = "n" + std::to_string(i);
    k.profile = makeProfile(static_cast<int64_t>(rng() % 9),
                            1 + static_cast<int64_t>(rng() % 4), tokens);
    g.nodes.push_back(k);
  }
  // layered wiring: each node (except the first) consumes 1-2 earlier nodes
  int edgeSeq = 0;
  for (int i = 1; i < n; ++i) {
    int fanin = 1 + static_cast<int>(rng() % 2);
    std::vector<int> prods;
    for (int f = 0; f < fanin; ++f) {
      int p = static_cast<int>(rng() % i);
      if (std::find(prods.begin(), prods.end(), p) == prods.end())
        prods.push_back(p);
    }
    for (int p : prods) {
      FifoEdge e;
      e.id = "e" + std::to_string(edgeSeq++);
      e.producer = {g.nodes[p].id, static_cast<int>(g.nodes[p].outPorts.size())};
      e.consumer = {g.nodes[i].id, static_cast<int>(g.nodes[i].inPorts.size())};
      e.type = ty;
      e.external = false;
      g.nodes[p].outPorts.push_back(ty);
      g.nodes[i].inPorts.push_back(ty);
      g.edges.push_back(e);
    }
  }
  // every node needs at least one out-port consumer or none; sinks are fine.
  validateGraphOrThrow(g);
  return g;
}

}  // namespace testsupport
