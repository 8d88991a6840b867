#include <doctest.h>

#include "streamflow/sim.hpp"

using namespace streamflow;

namespace {

ITensorType streamType(int64_t tokens) {
  ITensorType t;
  t.dataShape = {tokens, 4};
  t.elementShape = {1, 4};
  t.iterTripcounts = {tokens, 1};
  t.iterSteps = {1, 4};
  t.dimSource = {0, 1};
  return t;
}

// src --e--> dst with the given profiles; edge depth as requested.
DataflowGraph chain2(KernelProfile src, KernelProfile dst, int64_t depth,
                     int64_t tokens) {
  DataflowGraph g;
  auto ty = streamType(tokens);
  KernelNode a;
  a.id = "src";
  a.outPorts = {ty};
  a.profile = src;
  KernelNode b;
  b.id = "dst";
  b.inPorts = {ty};
  b.profile = dst;
  g.nodes = {a, b};
  FifoEdge e;
  e.id = "e";
  e.producer = {"src", 0};
  e.consumer = {"dst", 0};
  e.type = ty;
  e.depth = depth;
  g.edges.push_back(e);
  return g;
}

}  // namespace

TEST_CASE("hand-traced two-kernel chain") {
  // src: D=2, II=1, T=3 fires at 0,1,2; tokens poppable at 3,4,5.
  // dst: D=1, II=2, T=3 pops at 3,5,7.
  auto g = chain2(makeProfile(2, 1, 3), makeProfile(1, 2, 3), 16, 3);
  auto tr = simulate(g);
  CHECK(!tr.deadlock);
  CHECK(!tr.timeout);
  CHECK(tr.nodes["src"].start == 0);
  CHECK(tr.nodes["src"].finish == 4);
  CHECK(tr.nodes["dst"].start == 3);
  CHECK(tr.nodes["dst"].inputStarved == 3);
  CHECK(tr.nodes["dst"].outputBlocked == 0);
  CHECK(tr.nodes["dst"].finish == 8);
  CHECK(tr.edges["e"].maxOccupancy == 2);
  CHECK(tr.edges["e"].pushed == 3);
  CHECK(tr.edges["e"].popped == 3);
  CHECK(tr.totalLatency == 8);
}

TEST_CASE("warm-up source against a half-rate target peaks at three tokens") {
  // Source streams 1 token/cycle after a 2-cycle warm-up; target consumes
  // every 2 cycles over 5 tokens and starts 3 cycles late.
  auto g = chain2(makeProfile(2, 1, 5), makeProfile(1, 2, 5), 16, 5);
  g.nodes[1].startTime = 3;
  auto tr = simulate(g);
  CHECK(!tr.deadlock);
  CHECK(tr.edges["e"].maxOccupancy == 3);
}

TEST_CASE("a full FIFO blocks the producer and freezes its pipeline") {
  auto fast = makeProfile(0, 1, 4);
  auto slow = makeProfile(1, 4, 4);
  auto unbounded = simulate(chain2(fast, slow, 1 << 20, 4));
  REQUIRE(!unbounded.deadlock);
  int64_t peak = unbounded.edges["e"].maxOccupancy;
  CHECK(peak == 3);
  CHECK(unbounded.nodes["src"].outputBlocked == 0);

  auto atPeak = simulate(chain2(fast, slow, peak, 4));
  CHECK(atPeak.nodes["src"].outputBlocked == 0);
  CHECK(atPeak.edges["e"].maxOccupancy == peak);

  auto below = simulate(chain2(fast, slow, peak - 1, 4));
  CHECK(below.nodes["src"].outputBlocked > 0);
  CHECK(below.edges["e"].maxOccupancy <= peak - 1);
  CHECK(!below.deadlock);
  CHECK(below.totalLatency >= atPeak.totalLatency);
}

TEST_CASE("ignoreDepths treats every FIFO as unbounded") {
  auto g = chain2(makeProfile(0, 1, 4), makeProfile(1, 4, 4), 1, 4);
  SimConfig cfg;
  cfg.ignoreDepths = true;
  auto tr = simulate(g, cfg);
  CHECK(tr.nodes["src"].outputBlocked == 0);
  CHECK(tr.edges["e"].maxOccupancy == 3);
}

TEST_CASE("rate-scaled ports conserve tokens") {
  // join-like kernel: one port carries 2 tokens, the other 4, over 4 firings
  auto ty2 = streamType(2), ty4 = streamType(4);
  DataflowGraph g;
  KernelNode a;
  a.id = "a";
  a.outPorts = {ty2};
  a.profile = makeProfile(0, 1, 2);
  KernelNode b;
  b.id = "b";
  b.outPorts = {ty4};
  b.profile = makeProfile(0, 1, 4);
  KernelNode j;
  j.id = "j";
  j.kind = NodeKind::Join;
  j.inPorts = {ty2, ty4};
  j.outPorts = {streamType(6)};
  j.profile = makeProfile(0, 1, 6);
  KernelNode s;
  s.id = "s";
  s.inPorts = {streamType(6)};
  s.profile = makeProfile(0, 1, 6);
  g.nodes = {a, b, j, s};
  auto mk = [&](std::string id, std::string p, int pp, std::string c, int cp,
               ITensorType ty) {
    FifoEdge e;
    e.id = id;
    e.producer = {p, pp};
    e.consumer = {c, cp};
    e.type = ty;
    e.depth = 8;
    g.edges.push_back(e);
  };
  mk("ea", "a", 0, "j", 0, ty2);
  mk("eb", "b", 0, "j", 1, ty4);
  mk("ej", "j", 0, "s", 0, streamType(6));
  auto tr = simulate(g);
  CHECK(!tr.deadlock);
  CHECK(tr.edges["ea"].pushed == 2);
  CHECK(tr.edges["ea"].popped == 2);
  CHECK(tr.edges["eb"].popped == 4);
  CHECK(tr.edges["ej"].popped == 6);
  CHECK(tr.nodes["j"].firings == 6);
}

TEST_CASE("dma latency extends dma nodes only") {
  auto g = chain2(makeProfile(1, 1, 3), makeProfile(1, 1, 3), 8, 3);
  g.nodes[0].kind = NodeKind::DmaIn;
  SimConfig plain, slow;
  slow.dmaLatency = 5;
  auto a = simulate(g, plain);
  auto b = simulate(g, slow);
  CHECK(b.nodes["dst"].start == a.nodes["dst"].start + 5);
}

TEST_CASE("tiny horizon reports a timeout") {
  auto g = chain2(makeProfile(2, 1, 5), makeProfile(1, 2, 5), 16, 5);
  SimConfig cfg;
  cfg.horizon = 3;
  auto tr = simulate(g, cfg);
  CHECK(tr.timeout);
  CHECK(!tr.blockedNodes.empty());
}

TEST_CASE("overlap ratio reflects pipelining") {
  auto g = chain2(makeProfile(1, 2, 32), makeProfile(1, 2, 32), 8, 32);
  auto tr = simulate(g);
  CHECK(measureOverlap(tr) > 1.3);
}

TEST_CASE("simulation is deterministic") {
  auto g = chain2(makeProfile(3, 2, 7), makeProfile(2, 3, 7), 2, 7);
  SimConfig cfg;
  cfg.recordOccupancy = true;
  auto a = simulate(g, cfg);
  auto b = simulate(g, cfg);
  CHECK(toJson(a) == toJson(b));
  CHECK(occupancyCsv(a) == occupancyCsv(b));
  CHECK(occupancyCsv(a).find("e,") != std::string::npos);
}
