#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/graph.hpp"

namespace streamflow {

struct DieSpec {
  int count = 1;
  int64_t capacity = 1LL << 40;  // bytes per die
  double alpha = 1.0;            // weight on cross-die traffic
  double beta = 1.0;             // weight on load imbalance
};

struct DiePlan {
  std::map<std::string, int> die;  // node id -> die index
  double objective = 0.0;
  bool exact = false;  // true when found by exhaustive branch-and-bound
};

nlohmann::json toJson(const DiePlan &p);

/// alpha * (sum of cross-die edge token bytes) + beta * (max - min die
/// load by node resourceCost). Exact branch-and-bound up to 12 nodes,
/// greedy placement plus move/swap hill-climbing above. Writes dieIndex.
DiePlan partitionDies(DataflowGraph &g, const DieSpec &spec);

double dieObjective(const DataflowGraph &g,
                    const std::map<std::string, int> &assign,
                    const DieSpec &spec);

struct BankClass {
  std::string name;
  int64_t unitBytes = 0;
  int unitCount = 0;
};

struct BankSpec {
  std::vector<BankClass> classes;  // ordered smallest unit first
};

BankSpec bankSpecFromJson(const nlohmann::json &j);

struct Buffer {
  std::string id;
  int64_t bytes = 0;
};

struct BankPlacement {
  int classIndex = -1;
  std::vector<int> units;  // > 1 entry when split across units
};

struct BankAssignment {
  std::map<std::string, BankPlacement> placements;
};

nlohmann::json toJson(const BankAssignment &a, const BankSpec &spec);

/// Buffers sorted by size descending (ties by id) each take the smallest
/// class whose unit fits and has free units; oversize buffers split across
/// units of the largest class. Throws when units run out.
BankAssignment assignMemoryBanks(const std::vector<Buffer> &buffers,
                                 const BankSpec &spec);

}  // namespace streamflow
