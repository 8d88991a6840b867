#include "streamflow/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace streamflow {

std::string toString(NodeKind k) {
  switch (k) {
    case NodeKind::Compute: return "compute";
    case NodeKind::Converter: return "converter";
    case NodeKind::DmaIn: return "dma_in";
    case NodeKind::DmaOut: return "dma_out";
    case NodeKind::Fork: return "fork";
    case NodeKind::Join: return "join";
  }
  return "compute";
}

NodeKind nodeKindFromString(const std::string &s) {
  if (s == "compute") return NodeKind::Compute;
  if (s == "converter") return NodeKind::Converter;
  if (s == "dma_in") return NodeKind::DmaIn;
  if (s == "dma_out") return NodeKind::DmaOut;
  if (s == "fork") return NodeKind::Fork;
  if (s == "join") return NodeKind::Join;
  throw std::invalid_argument("unknown node kind '" + s + "'");
}

KernelProfile makeProfile(int64_t delay, int64_t ii, int64_t tokens) {
  if (delay < 0 || ii < 1 || tokens < 1)
    throw std::invalid_argument("profile requires D >= 0, II >= 1, T >= 1");
  return KernelProfile{delay, ii, tokens};
}

KernelNode *DataflowGraph::findNode(const std::string &id) {
  for (auto &n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const KernelNode *DataflowGraph::findNode(const std::string &id) const {
  for (auto &n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

FifoEdge *DataflowGraph::findEdge(const std::string &id) {
  for (auto &e : edges)
    if (e.id == id) return &e;
  return nullptr;
}

std::vector<const FifoEdge *> DataflowGraph::inEdges(const std::string &node) const {
  std::vector<const FifoEdge *> out;
  for (auto &e : edges)
    if (e.consumer.node == node) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](auto *a, auto *b) {
    return a->consumer.port < b->consumer.port;
  });
  return out;
}

std::vector<const FifoEdge *> DataflowGraph::outEdges(const std::string &node) const {
  std::vector<const FifoEdge *> out;
  for (auto &e : edges)
    if (e.producer.node == node) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](auto *a, auto *b) {
    return a->producer.port < b->producer.port;
  });
  return out;
}

std::optional<Violation> validateGraph(const DataflowGraph &g) {
  auto fail = [](std::string m) { return std::optional<Violation>{{std::move(m)}}; };

  std::set<std::string> ids;
  for (auto &n : g.nodes) {
    if (!ids.insert(n.id).second) return fail("duplicate node id '" + n.id + "'");
    for (auto &p : n.inPorts)
      if (auto v = validate(p))
        return fail("node '" + n.id + "' in-port: " + v->message);
    for (auto &p : n.outPorts)
      if (auto v = validate(p))
        return fail("node '" + n.id + "' out-port: " + v->message);
    if (n.kind == NodeKind::Fork) {
      if (n.inPorts.size() != 1 || n.outPorts.size() < 2)
        return fail("fork '" + n.id + "' must have 1 input and >= 2 outputs");
      for (auto &p : n.outPorts)
        if (!typesMatch(p, n.inPorts[0]))
          return fail("fork '" + n.id + "' output type differs from input");
    }
    if (n.kind == NodeKind::Join) {
      if (n.inPorts.size() < 2 || n.outPorts.size() != 1)
        return fail("join '" + n.id + "' must have >= 2 inputs and 1 output");
      int64_t sum = 0;
      for (auto &p : n.inPorts) sum += tokenCount(p);
      if (tokenCount(n.outPorts[0]) != sum)
        return fail("join '" + n.id + "' output token count must equal input sum");
    }
    if (n.kind == NodeKind::Compute && n.inPorts.size() > 1) {
      int64_t t0 = tokenCount(n.inPorts[0]);
      for (auto &p : n.inPorts)
        if (tokenCount(p) != t0)
          return fail("kernel '" + n.id + "' input token counts differ");
    }
  }

  std::set<std::string> edgeIds;
  std::set<std::pair<std::string, int>> usedOut, usedIn;
  for (auto &e : g.edges) {
    if (!edgeIds.insert(e.id).second)
      return fail("duplicate edge id '" + e.id + "'");
    auto *prod = g.findNode(e.producer.node);
    auto *cons = g.findNode(e.consumer.node);
    if (!prod) return fail("edge '" + e.id + "' producer node missing");
    if (!cons) return fail("edge '" + e.id + "' consumer node missing");
    if (e.producer.port < 0 ||
        e.producer.port >= static_cast<int>(prod->outPorts.size()))
      return fail("edge '" + e.id + "' producer port out of range");
    if (e.consumer.port < 0 ||
        e.consumer.port >= static_cast<int>(cons->inPorts.size()))
      return fail("edge '" + e.id + "' consumer port out of range");
    if (!usedOut.insert({e.producer.node, e.producer.port}).second)
      return fail("producer port of edge '" + e.id + "' already connected");
    if (!usedIn.insert({e.consumer.node, e.consumer.port}).second)
      return fail("consumer port of edge '" + e.id + "' already connected");
    if (!e.external) {
      if (!typesMatch(prod->outPorts[e.producer.port],
                      cons->inPorts[e.consumer.port]))
        return fail("stream edge '" + e.id + "' connects mismatched itensor types");
      if (!typesMatch(e.type, prod->outPorts[e.producer.port]))
        return fail("edge '" + e.id + "' type differs from producer port");
    }
    if (e.depth && *e.depth < 1)
      return fail("edge '" + e.id + "' depth must be >= 1");
  }

  try {
    topoOrder(g);
  } catch (const std::exception &ex) {
    return fail(ex.what());
  }
  return std::nullopt;
}

void validateGraphOrThrow(const DataflowGraph &g) {
  if (auto v = validateGraph(g))
    throw std::invalid_argument("invalid graph: " + v->message);
}

std::vector<std::string> topoOrder(const DataflowGraph &g) {
  std::map<std::string, int> indeg;
  for (auto &n : g.nodes) indeg[n.id] = 0;
  for (auto &e : g.edges) {
    if (e.producer.node == e.consumer.node)
      throw std::invalid_argument("cycle through edge '" + e.id + "'");
    ++indeg[e.consumer.node];
  }
  std::set<std::string> ready;
  for (auto &[id, d] : indeg)
    if (d == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (auto &e : g.edges) {
      if (e.producer.node != id) continue;
      if (--indeg[e.consumer.node] == 0) ready.insert(e.consumer.node);
    }
  }
  if (order.size() != g.nodes.size()) {
    for (auto &e : g.edges)
      if (indeg[e.consumer.node] > 0 &&
          std::find(order.begin(), order.end(), e.producer.node) == order.end())
        throw std::invalid_argument("cycle through edge '" + e.id + "'");
    throw std::invalid_argument("cycle in dataflow graph");
  }
  return order;
}

nlohmann::json toJson(const DataflowGraph &g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (auto &n : g.nodes) {
    nlohmann::json jn = {
        {"id", n.id},
        {"kind", toString(n.kind)},
        {"inPorts", nlohmann::json::array()},
        {"outPorts", nlohmann::json::array()},
        {"resourceCost", n.resourceCost},
    };
    for (auto &p : n.inPorts) jn["inPorts"].push_back(toJson(p));
    for (auto &p : n.outPorts) jn["outPorts"].push_back(toJson(p));
    if (n.profile)
      jn["profile"] = {{"D", n.profile->delay},
                       {"II", n.profile->ii},
                       {"T", n.profile->tokens},
                       {"L", n.profile->latency()}};
    if (n.fusionIndex) jn["fusion_index"] = *n.fusionIndex;
    if (n.dieIndex) jn["die_index"] = *n.dieIndex;
    if (n.converter) jn["converter"] = toJson(*n.converter);
    if (n.startTime) jn["startTime"] = *n.startTime;
    nodes.push_back(std::move(jn));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (auto &e : g.edges) {
    nlohmann::json je = {
        {"id", e.id},
        {"producer", {{"node", e.producer.node}, {"port", e.producer.port}}},
        {"consumer", {{"node", e.consumer.node}, {"port", e.consumer.port}}},
        {"type", toJson(e.type)},
        {"external", e.external},
    };
    if (e.depth) je["depth"] = *e.depth;
    edges.push_back(std::move(je));
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

DataflowGraph graphFromJson(const nlohmann::json &j) {
  DataflowGraph g;
  for (auto &jn : j.at("nodes")) {
    KernelNode n;
    n.id = jn.at("id").get<std::string>();
    n.kind = nodeKindFromString(jn.at("kind").get<std::string>());
    for (auto &jp : jn.at("inPorts")) n.inPorts.push_back(typeFromJson(jp));
    for (auto &jp : jn.at("outPorts")) n.outPorts.push_back(typeFromJson(jp));
    n.resourceCost = jn.value("resourceCost", int64_t{0});
    if (jn.contains("profile"))
      n.profile = makeProfile(jn["profile"].at("D").get<int64_t>(),
                              jn["profile"].at("II").get<int64_t>(),
                              jn["profile"].at("T").get<int64_t>());
    if (jn.contains("fusion_index")) n.fusionIndex = jn["fusion_index"].get<int>();
    if (jn.contains("die_index")) n.dieIndex = jn["die_index"].get<int>();
    if (jn.contains("converter"))
      n.converter = converterSpecFromJson(jn["converter"]);
    if (jn.contains("startTime")) n.startTime = jn["startTime"].get<int64_t>();
    g.nodes.push_back(std::move(n));
  }
  for (auto &je : j.at("edges")) {
    FifoEdge e;
    e.id = je.at("id").get<std::string>();
    e.producer = {je.at("producer").at("node").get<std::string>(),
                  je.at("producer").at("port").get<int>()};
    e.consumer = {je.at("consumer").at("node").get<std::string>(),
                  je.at("consumer").at("port").get<int>()};
    e.type = typeFromJson(je.at("type"));
    e.external = je.value("external", false);
    if (je.contains("depth")) e.depth = je["depth"].get<int64_t>();
    g.edges.push_back(std::move(e));
  }
  return g;
}

std::string serialize(const DataflowGraph &g) {
  validateGraphOrThrow(g);
  return toJson(g).dump(2) + "\n";
}

DataflowGraph deserialize(const std::string &text) {
  nlohmann::json j = nlohmann::json::parse(text);  // throws with position info
  return graphFromJson(j);
}

}  // namespace streamflow
