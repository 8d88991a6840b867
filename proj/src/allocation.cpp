#include "streamflow/allocation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace streamflow {

nlohmann::json toJson(const DiePlan &p) {
  return {{"die", p.die}, {"objective", p.objective}, {"exact", p.exact}};
}

double dieObjective(const DataflowGraph &g,
                    const std::map<std::string, int> &assign,
                    const DieSpec &spec) {
  int64_t cross = 0;
  for (auto &e : g.edges)
    if (assign.at(e.producer.node) != assign.at(e.consumer.node))
      cross += e.type.tokenBytes();
  std::vector<int64_t> load(spec.count, 0);
  for (auto &n : g.nodes) load[assign.at(n.id)] += n.resourceCost;
  int64_t mx = *std::max_element(load.begin(), load.end());
  int64_t mn = *std::min_element(load.begin(), load.end());
  return spec.alpha * static_cast<double>(cross) +
         spec.beta * static_cast<double>(mx - mn);
}

namespace {

bool withinCapacity(const DataflowGraph &g,
                    const std::map<std::string, int> &assign,
                    const DieSpec &spec) {
  std::vector<int64_t> load(spec.count, 0);
  for (auto &n : g.nodes) load[assign.at(n.id)] += n.resourceCost;
  for (int64_t l : load)
    if (l > spec.capacity) return false;
  return true;
}

void branchAndBound(const DataflowGraph &g, const DieSpec &spec,
                    const std::vector<std::string> &order, size_t i,
                    std::map<std::string, int> &assign, int64_t crossSoFar,
                    std::vector<int64_t> &load, int maxUsed, double &bestObj,
                    std::map<std::string, int> &best) {
  if (spec.alpha * static_cast<double>(crossSoFar) >= bestObj) return;
  if (i == order.size()) {
    double obj = dieObjective(g, assign, spec);
    if (obj < bestObj) {
      bestObj = obj;
      best = assign;
    }
    return;
  }
  const std::string &id = order[i];
  const KernelNode *n = g.findNode(id);
  // identical dies: only the lowest unused index may open a new die
  int limit = std::min(maxUsed + 1, spec.count - 1);
  for (int d = 0; d <= limit; ++d) {
    if (load[d] + n->resourceCost > spec.capacity) continue;
    int64_t addedCross = 0;
    for (auto *e : g.inEdges(id)) {
      auto it = assign.find(e->producer.node);
      if (it != assign.end() && it->second != d)
        addedCross += e->type.tokenBytes();
    }
    for (auto *e : g.outEdges(id)) {
      auto it = assign.find(e->consumer.node);
      if (it != assign.end() && it->second != d)
        addedCross += e->type.tokenBytes();
    }
    assign[id] = d;
    load[d] += n->resourceCost;
    branchAndBound(g, spec, order, i + 1, assign, crossSoFar + addedCross,
                   load, std::max(maxUsed, d), bestObj, best);
    load[d] -= n->resourceCost;
    assign.erase(id);
  }
}

}  // namespace

DiePlan partitionDies(DataflowGraph &g, const DieSpec &spec) {
  if (spec.count < 1) throw std::invalid_argument("partitionDies: count >= 1");
  int64_t total = 0;
  for (auto &n : g.nodes) total += n.resourceCost;
  if (total > spec.capacity * spec.count)
    throw InfeasibleError(
        "partitionDies: total resource cost exceeds total die capacity");

  auto order = topoOrder(g);
  DiePlan plan;
  if (spec.count == 1 || g.nodes.empty()) {
    for (auto &n : g.nodes) plan.die[n.id] = 0;
    plan.exact = true;
  } else if (order.size() <= 12) {
    std::map<std::string, int> assign, best;
    std::vector<int64_t> load(spec.count, 0);
    double bestObj = std::numeric_limits<double>::infinity();
    branchAndBound(g, spec, order, 0, assign, 0, load, -1, bestObj, best);
    if (best.empty())
      throw InfeasibleError("partitionDies: no feasible assignment");
    plan.die = best;
    plan.exact = true;
  } else {
    // greedy: cheapest incremental objective, then move/swap hill-climbing
    std::vector<int64_t> load(spec.count, 0);
    for (auto &id : order) {
      const KernelNode *n = g.findNode(id);
      int bestDie = -1;
      double bestInc = 0;
      for (int d = 0; d < spec.count; ++d) {
        if (load[d] + n->resourceCost > spec.capacity) continue;
        int64_t cross = 0;
        for (auto *e : g.inEdges(id)) {
          auto it = plan.die.find(e->producer.node);
          if (it != plan.die.end() && it->second != d)
            cross += e->type.tokenBytes();
        }
        double inc = spec.alpha * static_cast<double>(cross) +
                     spec.beta * static_cast<double>(load[d]);
        if (bestDie < 0 || inc < bestInc) {
          bestDie = d;
          bestInc = inc;
        }
      }
      if (bestDie < 0)
        throw InfeasibleError("partitionDies: no feasible assignment");
      plan.die[id] = bestDie;
      load[bestDie] += n->resourceCost;
    }
    bool improved = true;
    while (improved) {
      improved = false;
      double cur = dieObjective(g, plan.die, spec);
      for (auto &id : order) {
        int orig = plan.die[id];
        for (int d = 0; d < spec.count; ++d) {
          if (d == orig) continue;
          plan.die[id] = d;
          if (withinCapacity(g, plan.die, spec) &&
              dieObjective(g, plan.die, spec) < cur - 1e-12) {
            cur = dieObjective(g, plan.die, spec);
            orig = d;
            improved = true;
          } else {
            plan.die[id] = orig;
          }
        }
      }
      for (size_t a = 0; a < order.size() && !improved; ++a)
        for (size_t b = a + 1; b < order.size(); ++b) {
          int da = plan.die[order[a]], db = plan.die[order[b]];
          if (da == db) continue;
          plan.die[order[a]] = db;
          plan.die[order[b]] = da;
          if (withinCapacity(g, plan.die, spec) &&
              dieObjective(g, plan.die, spec) < cur - 1e-12) {
            improved = true;
            break;
          }
          plan.die[order[a]] = da;
          plan.die[order[b]] = db;
        }
    }
  }
  plan.objective = g.nodes.empty() ? 0.0 : dieObjective(g, plan.die, spec);
  for (auto &n : g.nodes) n.dieIndex = plan.die[n.id];
  return plan;
}

BankSpec bankSpecFromJson(const nlohmann::json &j) {
  BankSpec s;
  for (auto &jc : j.at("classes"))
    s.classes.push_back({jc.at("name").get<std::string>(),
                         jc.at("unitBytes").get<int64_t>(),
                         jc.at("unitCount").get<int>()});
  for (size_t i = 1; i < s.classes.size(); ++i)
    if (s.classes[i].unitBytes < s.classes[i - 1].unitBytes)
      throw std::invalid_argument("bank classes must be ordered by unit size");
  return s;
}

nlohmann::json toJson(const BankAssignment &a, const BankSpec &spec) {
  nlohmann::json out = nlohmann::json::object();
  for (auto &[id, p] : a.placements)
    out[id] = {{"class", spec.classes.at(p.classIndex).name},
               {"units", p.units}};
  return out;
}

BankAssignment assignMemoryBanks(const std::vector<Buffer> &buffers,
                                 const BankSpec &spec) {
  if (spec.classes.empty())
    throw std::invalid_argument("assignMemoryBanks: no bank classes");
  std::vector<Buffer> sorted = buffers;
  std::sort(sorted.begin(), sorted.end(), [](const Buffer &a, const Buffer &b) {
    if (a.bytes != b.bytes) return a.bytes > b.bytes;
    return a.id < b.id;
  });
  std::vector<int> used(spec.classes.size(), 0);
  BankAssignment out;
  for (auto &buf : sorted) {
    BankPlacement p;
    for (size_t c = 0; c < spec.classes.size(); ++c) {
      if (spec.classes[c].unitBytes < buf.bytes) continue;
      if (used[c] >= spec.classes[c].unitCount) continue;
      p.classIndex = static_cast<int>(c);
      p.units = {used[c]++};
      break;
    }
    if (p.classIndex < 0) {
      // no single unit fits (or none free in a fitting class): split across
      // units of the largest class
      int c = static_cast<int>(spec.classes.size()) - 1;
      int64_t unit = spec.classes[c].unitBytes;
      int need = static_cast<int>((buf.bytes + unit - 1) / unit);
      if (used[c] + need > spec.classes[c].unitCount)
        throw InfeasibleError("assignMemoryBanks: out of bank units for '" +
                                    buf.id + "'");
      p.classIndex = c;
      for (int k = 0; k < need; ++k) p.units.push_back(used[c]++);
    }
    out.placements[buf.id] = p;
  }
  return out;
}

}  // namespace streamflow
