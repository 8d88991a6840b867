#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamflow/dse.hpp"
#include "streamflow/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 2;
constexpr int kInfeasible = 3;
constexpr int kDeadlock = 4;

json readJsonFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return json::parse(in);
}

void writeFile(const fs::path &path, const std::string &text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

struct CommonOpts {
  std::string opsPath;
  std::string tilesPath;
  std::string profilesPath;
  std::string banksPath;
  std::string outDir = "out";
  int64_t cMax = 1LL << 20;
  std::string strategy = "normal";
  int dies = 1;
  int64_t dieCapacity = 1LL << 40;
  int64_t horizon = 10'000'000;
  int64_t dmaLatency = 0;
};

streamflow::PipelineConfig pipelineConfig(const CommonOpts &o) {
  streamflow::PipelineConfig cfg;
  cfg.cMax = o.cMax;
  cfg.strategy = streamflow::sizingStrategyFromString(o.strategy);
  cfg.dies.count = o.dies;
  cfg.dies.capacity = o.dieCapacity;
  cfg.sim.horizon = o.horizon;
  cfg.model.dmaLatency = o.dmaLatency;
  if (!o.profilesPath.empty())
    cfg.model = streamflow::profileModelFromJson(readJsonFile(o.profilesPath));
  if (!o.banksPath.empty())
    cfg.banks = streamflow::bankSpecFromJson(readJsonFile(o.banksPath));
  return cfg;
}

streamflow::TileConfig tileConfig(const CommonOpts &o) {
  if (o.tilesPath.empty()) return {};
  return streamflow::tileConfigFromJson(readJsonFile(o.tilesPath));
}

int runCompile(const CommonOpts &o) {
  auto ops = streamflow::opGraphFromJson(readJsonFile(o.opsPath));
  auto cfg = pipelineConfig(o);
  auto result = streamflow::compilePipeline(ops, tileConfig(o), cfg);
  writeFile(fs::path(o.outDir) / "graph.json", streamflow::serialize(result.graph));
  writeFile(fs::path(o.outDir) / "report.json",
            streamflow::reportJson(result, cfg).dump(2) + "\n");
  std::cout << "compiled: " << result.graph.nodes.size() << " nodes, "
            << result.graph.edges.size() << " edges, latency "
            << result.trace.totalLatency << " cycles, on-chip "
            << result.postFusionOnChipBytes << " B\n";
  if (result.trace.deadlock || result.trace.timeout) {
    std::cerr << "simulation did not complete ("
              << (result.trace.deadlock ? "deadlock" : "timeout") << ")\n";
    return kDeadlock;
  }
  return kOk;
}

int runVerify(const std::string &graphPath, int64_t horizon) {
  std::ifstream in(graphPath);
  if (!in) throw std::invalid_argument("cannot open '" + graphPath + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto g = streamflow::deserialize(ss.str());
  if (auto v = streamflow::validateGraph(g)) {
    std::cerr << "validate_graph: " << v->message << "\n";
    return kValidationFailure;
  }
  for (auto &n : g.nodes) {
    if (n.kind != streamflow::NodeKind::Converter || !n.converter) continue;
    auto cx = streamflow::verifyConverter(n.inPorts.at(0), n.outPorts.at(0),
                                          *n.converter);
    if (cx) {
      std::cerr << "converter '" << n.id << "': " << cx->reason << "\n";
      return kValidationFailure;
    }
  }
  streamflow::SimConfig sc;
  sc.horizon = horizon;
  auto trace = streamflow::simulate(g, sc);
  std::cout << streamflow::toJson(trace).dump(2) << "\n";
  if (trace.deadlock || trace.timeout) return kDeadlock;
  std::cout << "verify: pass\n";
  return kOk;
}

int runSimulate(const std::string &graphPath, int64_t horizon,
                const std::string &csvPath) {
  std::ifstream in(graphPath);
  if (!in) throw std::invalid_argument("cannot open '" + graphPath + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto g = streamflow::deserialize(ss.str());
  streamflow::SimConfig sc;
  sc.horizon = horizon;
  sc.recordOccupancy = !csvPath.empty();
  auto trace = streamflow::simulate(g, sc);
  std::cout << streamflow::toJson(trace).dump(2) << "\n";
  if (!csvPath.empty())
    writeFile(csvPath, streamflow::occupancyCsv(trace));
  return trace.deadlock || trace.timeout ? kDeadlock : kOk;
}

int runExplore(const CommonOpts &o, const std::string &spacePath, int trials,
               uint64_t seed, bool grid) {
  auto ops = streamflow::opGraphFromJson(readJsonFile(o.opsPath));
  streamflow::DseSpace space;
  if (!spacePath.empty())
    space = streamflow::dseSpaceFromJson(readJsonFile(spacePath));
  if (trials > 0) space.trials = trials;
  space.seed = seed;
  if (grid) space.grid = true;
  auto cfg = pipelineConfig(o);
  auto res = streamflow::search(ops, space, cfg);

  std::ostringstream log;
  for (auto &t : res.trials) log << streamflow::toJson(t).dump() << "\n";
  writeFile(fs::path(o.outDir) / "trials.jsonl", log.str());
  writeFile(fs::path(o.outDir) / "best.json",
            streamflow::toJson(res.best).dump(2) + "\n");
  auto best = streamflow::compilePipeline(ops, res.best.config, cfg);
  writeFile(fs::path(o.outDir) / "graph.json", streamflow::serialize(best.graph));
  writeFile(fs::path(o.outDir) / "report.json",
            streamflow::reportJson(best, cfg).dump(2) + "\n");
  std::cout << "best trial " << res.best.index << ": latency "
            << res.best.latency << ", memory " << res.best.memory << "\n";
  return kOk;
}

int runReport(const std::string &graphPath) {
  std::ifstream in(graphPath);
  if (!in) throw std::invalid_argument("cannot open '" + graphPath + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto g = streamflow::deserialize(ss.str());
  json nodes = json::array();
  for (auto &n : g.nodes) {
    json jn = {{"id", n.id}, {"kind", streamflow::toString(n.kind)}};
    if (n.fusionIndex) jn["group"] = *n.fusionIndex;
    if (n.dieIndex) jn["die"] = *n.dieIndex;
    if (n.profile)
      jn["profile"] = {{"D", n.profile->delay},
                       {"II", n.profile->ii},
                       {"T", n.profile->tokens}};
    nodes.push_back(jn);
  }
  json edges = json::array();
  for (auto &e : g.edges) {
    json je = {{"id", e.id},
               {"from", e.producer.node},
               {"to", e.consumer.node},
               {"external", e.external},
               {"type", streamflow::printType(e.type)}};
    if (e.depth) je["depth"] = *e.depth;
    edges.push_back(je);
  }
  std::cout << json{{"nodes", nodes}, {"edges", edges}}.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"stream-dataflow compiler"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string graphPath, csvPath, spacePath;
  int trials = 0;
  uint64_t seed = 0;
  bool grid = false;

  auto addCommon = [&](CLI::App *c, bool needsOps) {
    if (needsOps)
      c->add_option("--ops", o.opsPath, "operator graph JSON")->required();
    c->add_option("--tiles", o.tilesPath, "tile config JSON");
    c->add_option("--profiles", o.profilesPath, "profile model / overrides JSON");
    c->add_option("--banks", o.banksPath, "memory bank spec JSON");
    c->add_option("--out", o.outDir, "output directory");
    c->add_option("--cmax", o.cMax, "fusion memory budget in bytes");
    c->add_option("--strategy", o.strategy, "normal|conservative");
    c->add_option("--dies", o.dies, "number of dies");
    c->add_option("--die-capacity", o.dieCapacity, "bytes per die");
    c->add_option("--horizon", o.horizon, "simulation cycle limit");
    c->add_option("--dma-latency", o.dmaLatency, "extra dma cycles per token");
  };

  auto *compile = app.add_subcommand("compile", "lower, fuse, size, allocate");
  addCommon(compile, true);

  auto *verify = app.add_subcommand("verify", "validate, check converters, simulate");
  verify->add_option("--graph", graphPath, "dataflow graph JSON")->required();
  verify->add_option("--horizon", o.horizon, "simulation cycle limit");

  auto *simulate = app.add_subcommand("simulate", "run the token simulator");
  simulate->add_option("--graph", graphPath, "dataflow graph JSON")->required();
  simulate->add_option("--horizon", o.horizon, "simulation cycle limit");
  simulate->add_option("--csv", csvPath, "write per-FIFO occupancy CSV");

  auto *explore = app.add_subcommand("explore", "tiling design-space search");
  addCommon(explore, true);
  explore->add_option("--space", spacePath, "search space JSON");
  explore->add_option("--trials", trials, "trial budget");
  explore->add_option("--seed", seed, "search seed");
  explore->add_flag("--grid", grid, "full grid instead of random sampling");

  auto *report = app.add_subcommand("report", "summarize a graph JSON");
  report->add_option("--graph", graphPath, "dataflow graph JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile->parsed()) return runCompile(o);
    if (verify->parsed()) return runVerify(graphPath, o.horizon);
    if (simulate->parsed()) return runSimulate(graphPath, o.horizon, csvPath);
    if (explore->parsed()) return runExplore(o, spacePath, trials, seed, grid);
    if (report->parsed()) return runReport(graphPath);
  } catch (const streamflow::InfeasibleError &ex) {
    std::cerr << "infeasible: " << ex.what() << "\n";
    return kInfeasible;
  } catch (const std::exception &ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kValidationFailure;
  }
  return kOk;
}
