#include "streamflow/tiling.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace streamflow {

namespace {

int64_t ceilDiv(int64_t a, int64_t b) { return (a + b - 1) / b; }

int64_t volume(const std::vector<int64_t> &v) {
  int64_t p = 1;
  for (int64_t e : v) p *= e;
  return p;
}

}  // namespace

std::string toString(OpTemplate t) {
  switch (t) {
    case OpTemplate::Matmul: return "matmul";
    case OpTemplate::ElementwiseUnary: return "elementwise_unary";
    case OpTemplate::ElementwiseBinary: return "elementwise_binary";
    case OpTemplate::Reduction: return "reduction";
    case OpTemplate::Transpose: return "transpose";
  }
  return "elementwise_unary";
}

OpTemplate opTemplateFromString(const std::string &s) {
  if (s == "matmul") return OpTemplate::Matmul;
  if (s == "elementwise_unary") return OpTemplate::ElementwiseUnary;
  if (s == "elementwise_binary") return OpTemplate::ElementwiseBinary;
  if (s == "reduction") return OpTemplate::Reduction;
  if (s == "transpose") return OpTemplate::Transpose;
  throw std::invalid_argument("unknown op template '" + s + "'");
}

void deriveLoops(OpNode &op) {
  op.loops.clear();
  op.operandLoops.clear();
  op.resultLoops.clear();
  auto fail = [&](const std::string &m) {
    throw std::invalid_argument("op '" + op.id + "': " + m);
  };
  switch (op.opTemplate) {
    case OpTemplate::Matmul: {
      if (op.operandShapes.size() != 2 || op.operandShapes[0].size() != 2 ||
          op.operandShapes[1].size() != 2 || op.resultShape.size() != 2)
        fail("matmul needs 2D operands A[M,K], B[K,N] and result C[M,N]");
      int64_t m = op.operandShapes[0][0], k = op.operandShapes[0][1];
      int64_t n = op.operandShapes[1][1];
      if (op.operandShapes[1][0] != k || op.resultShape != std::vector<int64_t>{m, n})
        fail("matmul shapes inconsistent");
      op.loops = {{"i", m, false}, {"j", n, false}, {"k", k, true}};
      op.operandLoops = {{0, 2}, {2, 1}};
      op.resultLoops = {0, 1};
      break;
    }
    case OpTemplate::ElementwiseUnary:
    case OpTemplate::ElementwiseBinary: {
      size_t nOperands = op.opTemplate == OpTemplate::ElementwiseUnary ? 1 : 2;
      if (op.operandShapes.size() != nOperands) fail("operand count mismatch");
      for (auto &s : op.operandShapes)
        if (s != op.resultShape) fail("elementwise shapes must all match");
      for (size_t d = 0; d < op.resultShape.size(); ++d)
        op.loops.push_back({"d" + std::to_string(d), op.resultShape[d], false});
      std::vector<int> ident(op.resultShape.size());
      std::iota(ident.begin(), ident.end(), 0);
      op.operandLoops.assign(nOperands, ident);
      op.resultLoops = ident;
      break;
    }
    case OpTemplate::Reduction: {
      if (op.operandShapes.size() != 1 || op.operandShapes[0].size() < 2)
        fail("reduction needs one operand of rank >= 2");
      auto &s = op.operandShapes[0];
      if (op.resultShape !=
          std::vector<int64_t>(s.begin(), s.end() - 1))
        fail("reduction result must drop the last operand dim");
      for (size_t d = 0; d < s.size(); ++d)
        op.loops.push_back(
            {"d" + std::to_string(d), s[d], d + 1 == s.size()});
      std::vector<int> ident(s.size());
      std::iota(ident.begin(), ident.end(), 0);
      op.operandLoops = {ident};
      op.resultLoops.assign(ident.begin(), ident.end() - 1);
      break;
    }
    case OpTemplate::Transpose: {
      if (op.operandShapes.size() != 1 || op.operandShapes[0].size() != 2 ||
          op.resultShape.size() != 2 ||
          op.resultShape != std::vector<int64_t>{op.operandShapes[0][1],
                                                 op.operandShapes[0][0]})
        fail("transpose needs X[A,B] -> Y[B,A]");
      op.loops = {{"d0", op.operandShapes[0][0], false},
                  {"d1", op.operandShapes[0][1], false}};
      op.operandLoops = {{0, 1}};
      op.resultLoops = {1, 0};
      break;
    }
  }
  if (op.inputs.size() != op.operandShapes.size())
    fail("inputs list must have one entry per operand");
}

std::optional<Violation> validateOpGraph(const OpGraph &g) {
  auto fail = [](std::string m) { return std::optional<Violation>{{std::move(m)}}; };
  std::map<std::string, const OpNode *> byId;
  for (auto &op : g.ops) {
    if (byId.count(op.id)) return fail("duplicate op id '" + op.id + "'");
    byId[op.id] = &op;
  }
  for (auto &op : g.ops)
    for (size_t o = 0; o < op.inputs.size(); ++o) {
      if (!op.inputs[o]) continue;
      auto it = byId.find(*op.inputs[o]);
      if (it == byId.end())
        return fail("op '" + op.id + "' input references missing op '" +
                    *op.inputs[o] + "'");
      if (it->second->resultShape != op.operandShapes[o])
        return fail("op '" + op.id + "' operand " + std::to_string(o) +
                    " shape differs from producer '" + *op.inputs[o] + "'");
    }
  // cycle check by repeated elimination of resolved ops
  std::set<std::string> placed;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto &op : g.ops) {
      if (placed.count(op.id)) continue;
      bool ready = true;
      for (auto &in : op.inputs)
        if (in && !placed.count(*in)) ready = false;
      if (ready) {
        placed.insert(op.id);
        progress = true;
      }
    }
  }
  if (placed.size() != g.ops.size()) return fail("op graph has a cycle");
  return std::nullopt;
}

OpGraph opGraphFromJson(const nlohmann::json &j) {
  OpGraph g;
  if (j.contains("elementKind")) {
    g.elementKind.name = j["elementKind"].at("name").get<std::string>();
    g.elementKind.byteWidth = j["elementKind"].at("byteWidth").get<int>();
  }
  for (auto &jo : j.at("ops")) {
    OpNode op;
    op.id = jo.at("id").get<std::string>();
    op.opTemplate = opTemplateFromString(jo.at("template").get<std::string>());
    op.operandShapes =
        jo.at("operands").get<std::vector<std::vector<int64_t>>>();
    op.resultShape = jo.at("result").get<std::vector<int64_t>>();
    for (auto &ji : jo.at("inputs")) {
      if (ji.is_null())
        op.inputs.push_back(std::nullopt);
      else
        op.inputs.push_back(ji.get<std::string>());
    }
    deriveLoops(op);
    g.ops.push_back(std::move(op));
  }
  if (auto v = validateOpGraph(g))
    throw std::invalid_argument("invalid op graph: " + v->message);
  return g;
}

nlohmann::json toJson(const OpGraph &g) {
  nlohmann::json ops = nlohmann::json::array();
  for (auto &op : g.ops) {
    nlohmann::json inputs = nlohmann::json::array();
    for (auto &in : op.inputs)
      inputs.push_back(in ? nlohmann::json(*in) : nlohmann::json(nullptr));
    ops.push_back({{"id", op.id},
                   {"template", toString(op.opTemplate)},
                   {"operands", op.operandShapes},
                   {"result", op.resultShape},
                   {"inputs", std::move(inputs)}});
  }
  return {{"elementKind",
           {{"name", g.elementKind.name},
            {"byteWidth", g.elementKind.byteWidth}}},
          {"ops", std::move(ops)}};
}

OpTileConfig TileConfig::resolved(const OpNode &op) const {
  OpTileConfig rc;
  auto it = perOp.find(op.id);
  if (it != perOp.end()) rc = it->second;
  size_t n = op.loops.size();
  if (rc.tileSizes.empty()) {
    for (auto &l : op.loops) {
      // largest divisor of the tripcount not above the default tile size
      int64_t t = std::min(defaultTileSize, l.tripcount);
      while (l.tripcount % t != 0) --t;
      rc.tileSizes.push_back(t);
    }
  }
  if (rc.loopOrder.empty()) {
    rc.loopOrder.resize(n);
    std::iota(rc.loopOrder.begin(), rc.loopOrder.end(), 0);
  }
  if (rc.unrollFactors.empty()) rc.unrollFactors.assign(n, 1);
  if (rc.tileSizes.size() != n || rc.loopOrder.size() != n ||
      rc.unrollFactors.size() != n)
    throw std::invalid_argument("tile config for op '" + op.id +
                                "' has wrong arity");
  std::vector<int> sorted = rc.loopOrder;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < n; ++i)
    if (sorted[i] != static_cast<int>(i))
      throw std::invalid_argument("tile config for op '" + op.id +
                                  "': loopOrder is not a permutation");
  for (size_t l = 0; l < n; ++l) {
    if (rc.tileSizes[l] < 1 || op.loops[l].tripcount % rc.tileSizes[l] != 0)
      throw std::invalid_argument("tile config for op '" + op.id + "': tile " +
                                  std::to_string(rc.tileSizes[l]) +
                                  " does not divide loop " + op.loops[l].name);
    if (rc.unrollFactors[l] < 1 || rc.tileSizes[l] % rc.unrollFactors[l] != 0)
      throw std::invalid_argument("tile config for op '" + op.id +
                                  "': unroll must divide tile size");
  }
  return rc;
}

TileConfig tileConfigFromJson(const nlohmann::json &j) {
  TileConfig c;
  c.defaultTileSize = j.value("defaultTileSize", int64_t{16});
  if (j.contains("perOp"))
    for (auto &[id, jc] : j["perOp"].items()) {
      OpTileConfig oc;
      if (jc.contains("tileSizes"))
        oc.tileSizes = jc["tileSizes"].get<std::vector<int64_t>>();
      if (jc.contains("loopOrder"))
        oc.loopOrder = jc["loopOrder"].get<std::vector<int>>();
      if (jc.contains("unrollFactors"))
        oc.unrollFactors = jc["unrollFactors"].get<std::vector<int64_t>>();
      c.perOp[id] = std::move(oc);
    }
  return c;
}

nlohmann::json toJson(const TileConfig &c) {
  nlohmann::json perOp = nlohmann::json::object();
  for (auto &[id, oc] : c.perOp)
    perOp[id] = {{"tileSizes", oc.tileSizes},
                 {"loopOrder", oc.loopOrder},
                 {"unrollFactors", oc.unrollFactors}};
  return {{"defaultTileSize", c.defaultTileSize}, {"perOp", std::move(perOp)}};
}

ProfileModel profileModelFromJson(const nlohmann::json &j) {
  ProfileModel m;
  m.pipeDepth = j.value("pipeDepth", int64_t{4});
  m.busBytes = j.value("busBytes", int64_t{64});
  m.dmaLatency = j.value("dmaLatency", int64_t{0});
  if (j.contains("overrides"))
    for (auto &[id, jp] : j["overrides"].items())
      m.overrides[id] = makeProfile(jp.at("D").get<int64_t>(),
                                    jp.at("II").get<int64_t>(),
                                    jp.at("T").get<int64_t>());
  return m;
}

KernelProfile estimateProfile(const KernelNode &node, int64_t workPerFiring,
                              int64_t unroll, const ProfileModel &model) {
  auto it = model.overrides.find(node.id);
  if (it != model.overrides.end()) return it->second;
  const ITensorType &t =
      node.outPorts.empty() ? node.inPorts.at(0) : node.outPorts.at(0);
  int64_t ii = std::max<int64_t>(1, ceilDiv(workPerFiring, std::max<int64_t>(1, unroll)));
  int64_t d = ii + model.pipeDepth;
  if (node.kind == NodeKind::DmaIn || node.kind == NodeKind::DmaOut)
    d += model.dmaLatency;
  return makeProfile(d, ii, tokenCount(t));
}

namespace {

ITensorType interfaceType(const OpNode &op, const OpTileConfig &rc,
                          const std::vector<int64_t> &shape,
                          const std::vector<int> &loopOfDim,
                          const ElementKind &kind) {
  ITensorType t;
  t.elementKind = kind;
  t.dataShape = shape;
  t.elementShape.resize(shape.size());
  t.dimSource.resize(shape.size());
  size_t n = op.loops.size();
  t.iterTripcounts.resize(n);
  t.iterSteps.resize(n);
  for (size_t p = 0; p < n; ++p) {
    int l = rc.loopOrder[p];
    t.iterTripcounts[p] = op.loops[l].tripcount / rc.tileSizes[l];
    t.iterSteps[p] = 1;  // re-iteration unless a data dim claims this level
  }
  for (size_t d = 0; d < shape.size(); ++d) {
    int l = loopOfDim[d];
    int p = static_cast<int>(std::find(rc.loopOrder.begin(), rc.loopOrder.end(), l) -
                             rc.loopOrder.begin());
    t.elementShape[d] = rc.tileSizes[l];
    t.dimSource[d] = p;
    t.iterSteps[p] = rc.tileSizes[l];
  }
  validateOrThrow(t);
  return t;
}

}  // namespace

DataflowGraph tileAndLower(const OpGraph &ops, const TileConfig &cfg,
                           const ProfileModel &model) {
  if (auto v = validateOpGraph(ops))
    throw std::invalid_argument("tileAndLower: " + v->message);
  DataflowGraph g;
  std::map<std::string, const OpNode *> byId;
  std::set<std::string> consumed;
  for (auto &op : ops.ops) {
    byId[op.id] = &op;
    for (auto &in : op.inputs)
      if (in) consumed.insert(*in);
  }

  int edgeSeq = 0;
  auto nextEdgeId = [&] { return "e" + std::to_string(edgeSeq++); };

  for (auto &op : ops.ops) {
    OpTileConfig rc = cfg.resolved(op);
    KernelNode kn;
    kn.id = op.id;
    kn.kind = NodeKind::Compute;
    for (size_t o = 0; o < op.operandShapes.size(); ++o)
      kn.inPorts.push_back(interfaceType(op, rc, op.operandShapes[o],
                                         op.operandLoops[o], ops.elementKind));
    kn.outPorts.push_back(interfaceType(op, rc, op.resultShape, op.resultLoops,
                                        ops.elementKind));
    int64_t work = 1, unroll = 1;
    for (size_t l = 0; l < op.loops.size(); ++l) {
      work *= rc.tileSizes[l];
      unroll *= rc.unrollFactors[l];
    }
    kn.profile = estimateProfile(kn, work, unroll, model);
    g.nodes.push_back(kn);  // kn kept as a stable local copy for port types

    for (size_t o = 0; o < op.inputs.size(); ++o) {
      if (op.inputs[o]) {
        FifoEdge e;
        e.id = nextEdgeId();
        e.producer = {*op.inputs[o], 0};
        e.consumer = {op.id, static_cast<int>(o)};
        e.external = true;  // memory-routed until fusion decides otherwise
        // type filled after all nodes exist (producer ports known then)
        g.edges.push_back(std::move(e));
      } else {
        KernelNode dma;
        dma.id = op.id + "_in" + std::to_string(o);
        dma.kind = NodeKind::DmaIn;
        dma.outPorts.push_back(kn.inPorts[o]);
        dma.profile = estimateProfile(
            dma, ceilDiv(kn.inPorts[o].tokenBytes(), model.busBytes), 1,
            model);
        FifoEdge e;
        e.id = nextEdgeId();
        e.producer = {dma.id, 0};
        e.consumer = {op.id, static_cast<int>(o)};
        e.type = dma.outPorts[0];
        e.external = true;
        g.nodes.push_back(std::move(dma));
        g.edges.push_back(std::move(e));
      }
    }
    if (!consumed.count(op.id)) {
      KernelNode dma;
      dma.id = op.id + "_out";
      dma.kind = NodeKind::DmaOut;
      dma.inPorts.push_back(kn.outPorts[0]);
      dma.profile = estimateProfile(
          dma, ceilDiv(kn.outPorts[0].tokenBytes(), model.busBytes), 1,
          model);
      FifoEdge e;
      e.id = nextEdgeId();
      e.producer = {op.id, 0};
      e.consumer = {dma.id, 0};
      e.type = kn.outPorts[0];
      e.external = true;
      g.nodes.push_back(std::move(dma));
      g.edges.push_back(std::move(e));
    }
  }
  // fill producer-out types on op→op edges
  for (auto &e : g.edges)
    if (e.type.dataShape.empty()) {
      const KernelNode *prod = g.findNode(e.producer.node);
      e.type = prod->outPorts[e.producer.port];
    }
  validateGraphOrThrow(g);
  return g;
}

nlohmann::json toJson(const PackedLayout &l) {
  return {{"originalShape", l.originalShape},
          {"tileSizes", l.tileSizes},
          {"packedShape", l.packedShape},
          {"vectorGroup", l.vectorGroup},
          {"wordShape", l.wordShape}};
}

PackedLayout pack(const std::vector<int64_t> &shape,
                  const std::vector<int64_t> &tileSizes,
                  const ElementKind &kind, int64_t busBits,
                  const std::vector<int64_t> &wordShape) {
  if (shape.size() != tileSizes.size())
    throw std::invalid_argument("pack: one tile size per dim required");
  int64_t elementBits = int64_t{kind.byteWidth} * 8;
  if (elementBits > busBits)
    throw std::invalid_argument("pack: element wider than the bus");
  PackedLayout l;
  l.originalShape = shape;
  l.tileSizes = tileSizes;
  l.vectorGroup = busBits / elementBits;
  for (size_t d = 0; d < shape.size(); ++d) {
    if (tileSizes[d] < 1 || shape[d] % tileSizes[d] != 0)
      throw std::invalid_argument("pack: tile does not divide shape");
    l.packedShape.push_back(shape[d] / tileSizes[d]);
  }
  if (wordShape.empty()) {
    for (int64_t t : tileSizes) l.packedShape.push_back(t);
  } else {
    if (wordShape.size() != shape.size())
      throw std::invalid_argument("pack: word shape rank mismatch");
    for (size_t d = 0; d < shape.size(); ++d) {
      if (wordShape[d] < 1 || tileSizes[d] % wordShape[d] != 0)
        throw std::invalid_argument("pack: word does not divide tile");
      l.packedShape.push_back(tileSizes[d] / wordShape[d]);
    }
    l.wordShape = wordShape;
  }
  return l;
}

std::pair<int64_t, int64_t> packIndex(const PackedLayout &l,
                                      const std::vector<int64_t> &index) {
  size_t r = l.originalShape.size();
  if (index.size() != r) throw std::invalid_argument("packIndex: rank mismatch");
  std::vector<int64_t> packed(2 * r);
  std::vector<int64_t> lane(r, 0);
  for (size_t d = 0; d < r; ++d) {
    int64_t inTile = index[d] % l.tileSizes[d];
    packed[d] = index[d] / l.tileSizes[d];
    if (l.wordShape.empty()) {
      packed[r + d] = inTile;
    } else {
      packed[r + d] = inTile / l.wordShape[d];
      lane[d] = inTile % l.wordShape[d];
    }
  }
  int64_t unit = 0;
  for (size_t i = 0; i < packed.size(); ++i)
    unit = unit * l.packedShape[i] + packed[i];
  if (l.wordShape.empty())
    return {unit / l.vectorGroup, unit % l.vectorGroup};
  int64_t laneFlat = 0;
  for (size_t d = 0; d < r; ++d)
    laneFlat = laneFlat * l.wordShape[d] + lane[d];
  return {unit, laneFlat};
}

std::vector<uint8_t> packBytes(const PackedLayout &l, const ElementKind &kind,
                               const std::vector<uint8_t> &raw) {
  int64_t vol = volume(l.originalShape);
  if (static_cast<int64_t>(raw.size()) != vol * kind.byteWidth)
    throw std::invalid_argument("packBytes: raw size mismatch");
  int64_t scalarsPerUnit =
      l.wordShape.empty() ? l.vectorGroup : volume(l.wordShape);
  std::vector<uint8_t> out(raw.size());
  std::vector<int64_t> idx(l.originalShape.size(), 0);
  for (int64_t flat = 0; flat < vol; ++flat) {
    auto [unit, lane] = packIndex(l, idx);
    int64_t dst = unit * scalarsPerUnit + lane;
    std::copy_n(raw.begin() + flat * kind.byteWidth, kind.byteWidth,
                out.begin() + dst * kind.byteWidth);
    for (int d = static_cast<int>(idx.size()) - 1; d >= 0; --d) {
      if (++idx[d] < l.originalShape[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

}  // namespace streamflow
