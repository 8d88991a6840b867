#include <doctest.h>

#include "streamflow/fusion.hpp"
#include "streamflow/sim.hpp"

using namespace streamflow;

namespace {

ITensorType i8Stream(int64_t elems, int64_t tokens) {
  ITensorType t;
  t.dataShape = {elems * tokens};
  t.elementShape = {elems};
  t.iterTripcounts = {tokens};
  t.iterSteps = {elems};
  t.dimSource = {0};
  t.elementKind = {"i8", 1};
  return t;
}

// k0 -> k1 -> k2 chain whose two edges cost 10 and 20 on-chip bytes
// (default FIFO depth 2 x token bytes 5 and 10, no converters).
DataflowGraph costedChain() {
  DataflowGraph g;
  auto ty1 = i8Stream(5, 4);
  auto ty2 = i8Stream(10, 4);
  KernelNode k0, k1, k2;
  k0.id = "k0";
  k0.outPorts = {ty1};
  k0.profile = makeProfile(1, 1, 4);
  k1.id = "k1";
  k1.inPorts = {ty1};
  k1.outPorts = {ty2};
  k1.profile = makeProfile(1, 1, 4);
  k2.id = "k2";
  k2.inPorts = {ty2};
  k2.profile = makeProfile(1, 1, 4);
  g.nodes = {k0, k1, k2};
  FifoEdge e0, e1;
  e0.id = "e0";
  e0.producer = {"k0", 0};
  e0.consumer = {"k1", 0};
  e0.type = ty1;
  e0.external = true;
  e1.id = "e1";
  e1.producer = {"k1", 0};
  e1.consumer = {"k2", 0};
  e1.type = ty2;
  e1.external = true;
  g.edges = {e0, e1};
  return g;
}

}  // namespace

TEST_CASE("edge memory cost counts FIFO slots plus converter bytes") {
  auto g = costedChain();
  CHECK(edgeMemoryCost(g, g.edges[0]) == 10);
  CHECK(edgeMemoryCost(g, g.edges[1]) == 20);
}

TEST_CASE("greedy fusion trace on the costed chain") {
  auto g = costedChain();
  auto plan = exploreFusion(g, 25);
  REQUIRE(plan.groups.size() == 2);
  CHECK(plan.groups[0] == std::vector<std::string>{"k0", "k1"});
  CHECK(plan.groups[1] == std::vector<std::string>{"k2"});
  CHECK(plan.costs == std::vector<int64_t>{10, 0});
  CHECK(!g.edges[0].external);  // fused edge becomes a stream
  CHECK(g.edges[1].external);   // cross-group edge stays memory-routed
  CHECK(g.findNode("k0")->fusionIndex == 0);
  CHECK(g.findNode("k2")->fusionIndex == 1);
}

TEST_CASE("a large budget fuses the whole chain") {
  auto g = costedChain();
  auto plan = exploreFusion(g, 100);
  CHECK(plan.groups.size() == 1);
  CHECK(plan.costs == std::vector<int64_t>{30});
}

TEST_CASE("single node over budget is infeasible, not a validation error") {
  auto g = costedChain();
  g.findNode("k1")->resourceCost = 1000;
  CHECK_THROWS_AS(exploreFusion(g, 25), InfeasibleError);
}

TEST_CASE("group costs include node resource costs") {
  auto g = costedChain();
  g.findNode("k1")->resourceCost = 16;  // 10 + 16 > 25 forces a split
  auto plan = exploreFusion(g, 25);
  CHECK(plan.groups.size() >= 2);
  CHECK(plan.nodeToGroup["k0"] != plan.nodeToGroup["k1"]);
}

TEST_CASE("converters are materialized on mismatched stream edges") {
  DataflowGraph g;
  ITensorType src;  // row-major tiles
  src.dataShape = {8, 8};
  src.elementShape = {4, 2};
  src.iterTripcounts = {2, 4};
  src.iterSteps = {4, 2};
  src.dimSource = {0, 1};
  ITensorType dst;  // column-major tiles
  dst.dataShape = {8, 8};
  dst.elementShape = {4, 2};
  dst.iterTripcounts = {4, 2};
  dst.iterSteps = {2, 4};
  dst.dimSource = {1, 0};
  KernelNode a, b;
  a.id = "a";
  a.outPorts = {src};
  a.profile = makeProfile(1, 1, 8);
  b.id = "b";
  b.inPorts = {dst};
  b.profile = makeProfile(1, 1, 8);
  a.fusionIndex = b.fusionIndex = 0;
  g.nodes = {a, b};
  FifoEdge e;
  e.id = "x";
  e.producer = {"a", 0};
  e.consumer = {"b", 0};
  e.type = src;
  e.external = false;
  g.edges = {e};

  materializeConverters(g);
  REQUIRE(g.nodes.size() == 3);
  const KernelNode *conv = g.findNode("x_conv");
  REQUIRE(conv);
  CHECK(toString(conv->kind) == "converter");
  REQUIRE(conv->converter);
  CHECK(conv->resourceCost == conv->converter->byteCost);
  CHECK(g.findEdge("x_a"));
  CHECK(g.findEdge("x_b"));
  CHECK(!validateGraph(g));
  // the rewired graph still simulates to completion
  SimConfig cfg;
  cfg.ignoreDepths = true;
  auto tr = simulate(g, cfg);
  CHECK(!tr.deadlock);
}

TEST_CASE("identity dma edges fold into the kernel") {
  auto ty = i8Stream(4, 4);
  DataflowGraph g;
  KernelNode in, k, out;
  in.id = "in";
  in.kind = NodeKind::DmaIn;
  in.outPorts = {ty};
  in.profile = makeProfile(2, 1, 4);
  k.id = "k";
  k.inPorts = {ty};
  k.outPorts = {ty};
  k.profile = makeProfile(3, 2, 4);
  out.id = "out";
  out.kind = NodeKind::DmaOut;
  out.inPorts = {ty};
  out.profile = makeProfile(1, 1, 4);
  g.nodes = {in, k, out};
  FifoEdge e0, e1;
  e0.id = "e0";
  e0.producer = {"in", 0};
  e0.consumer = {"k", 0};
  e0.type = ty;
  e1.id = "e1";
  e1.producer = {"k", 0};
  e1.consumer = {"out", 0};
  e1.type = ty;
  g.edges = {e0, e1};

  auto folded = foldIdentityEdges(g);
  CHECK(folded.nodes.size() == 1);
  CHECK(folded.edges.empty());
  const KernelNode *merged = folded.findNode("k");
  REQUIRE(merged);
  CHECK(merged->profile->delay == 2 + 3 + 1);  // dma delays absorbed
  CHECK(merged->profile->ii == 2);
  CHECK(merged->profile->tokens == 4);
}

TEST_CASE("external edges do not fold") {
  auto ty = i8Stream(4, 4);
  DataflowGraph g;
  KernelNode in, k;
  in.id = "in";
  in.kind = NodeKind::DmaIn;
  in.outPorts = {ty};
  in.profile = makeProfile(1, 1, 4);
  k.id = "k";
  k.inPorts = {ty};
  k.profile = makeProfile(1, 1, 4);
  g.nodes = {in, k};
  FifoEdge e;
  e.id = "e";
  e.producer = {"in", 0};
  e.consumer = {"k", 0};
  e.type = ty;
  e.external = true;
  g.edges = {e};
  CHECK(foldIdentityEdges(g).nodes.size() == 2);
}

TEST_CASE("stream vectorization regroups tokens and rescales T") {
  auto ty = i8Stream(4, 8);
  DataflowGraph g;
  KernelNode a, b;
  a.id = "a";
  a.outPorts = {ty};
  a.profile = makeProfile(1, 1, 8);
  b.id = "b";
  b.inPorts = {ty};
  b.profile = makeProfile(1, 1, 8);
  g.nodes = {a, b};
  FifoEdge e;
  e.id = "e";
  e.producer = {"a", 0};
  e.consumer = {"b", 0};
  e.type = ty;
  g.edges = {e};

  vectorizeStreams(g, {{"e", 4}});
  CHECK(tokenCount(g.edges[0].type) == 2);
  CHECK(g.edges[0].type.elementShape == std::vector<int64_t>{16});
  CHECK(g.findNode("a")->profile->tokens == 2);
  CHECK(g.findNode("b")->profile->tokens == 2);
  CHECK(!validateGraph(g));

  CHECK_THROWS(vectorizeStreams(g, {{"e", 3}}));   // does not divide
  CHECK_THROWS(vectorizeStreams(g, {{"zz", 2}}));  // unknown edge
}
