#pragma once

#include <cstdint>
#include <stdexcept>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/converter.hpp"
#include "streamflow/itensor.hpp"

namespace streamflow {

/// A structurally valid request that no design can satisfy (budget or
/// capacity exceeded), as opposed to malformed input.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NodeKind { Compute, Converter, DmaIn, DmaOut, Fork, Join };

std::string toString(NodeKind k);
NodeKind nodeKindFromString(const std::string &s);

/// (L, D, II, T) pipeline profile. L is always derived as D + (T-1)*II so
/// the production curve stays piecewise linear with slope 1/II.
struct KernelProfile {
  int64_t delay = 0;  // D: cycles to first output token
  int64_t ii = 1;     // cycles per firing
  int64_t tokens = 1; // firings per execution

  int64_t latency() const { return delay + (tokens - 1) * ii; }

  bool operator==(const KernelProfile &) const = default;
};

KernelProfile makeProfile(int64_t delay, int64_t ii, int64_t tokens);

struct KernelNode {
  std::string id;
  NodeKind kind = NodeKind::Compute;
  std::vector<ITensorType> inPorts;
  std::vector<ITensorType> outPorts;
  std::optional<KernelProfile> profile;
  int64_t resourceCost = 0;  // bytes of on-chip buffer the node itself needs
  std::optional<int> fusionIndex;
  std::optional<int> dieIndex;
  std::optional<ConverterSpec> converter;  // set on converter nodes
  std::optional<int64_t> startTime;        // scheduled release, cycles
};

struct PortRef {
  std::string node;
  int port = 0;

  bool operator==(const PortRef &) const = default;
};

struct FifoEdge {
  std::string id;
  PortRef producer;  // out-port of producer
  PortRef consumer;  // in-port of consumer
  ITensorType type;
  std::optional<int64_t> depth;  // tokens
  bool external = false;         // routed through external memory
};

struct DataflowGraph {
  std::vector<KernelNode> nodes;
  std::vector<FifoEdge> edges;

  KernelNode *findNode(const std::string &id);
  const KernelNode *findNode(const std::string &id) const;
  FifoEdge *findEdge(const std::string &id);

  std::vector<const FifoEdge *> inEdges(const std::string &node) const;
  std::vector<const FifoEdge *> outEdges(const std::string &node) const;
};

/// ok == empty optional; otherwise names the first violated invariant.
std::optional<Violation> validateGraph(const DataflowGraph &g);
void validateGraphOrThrow(const DataflowGraph &g);

/// Deterministic topological order over non-external edges; ties broken by
/// node id. Throws naming a cycle edge if the stream subgraph is cyclic.
std::vector<std::string> topoOrder(const DataflowGraph &g);

nlohmann::json toJson(const DataflowGraph &g);
DataflowGraph graphFromJson(const nlohmann::json &j);

std::string serialize(const DataflowGraph &g);
DataflowGraph deserialize(const std::string &text);

}  // namespace streamflow
