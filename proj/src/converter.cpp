#include "streamflow/converter.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace streamflow {

nlohmann::json toJson(const ConverterSpec &s) {
  return {
      {"bufShape", s.bufShape},
      {"sharedLoopDepth", s.sharedLoopDepth},
      {"sharedLoopTripcounts", s.sharedLoopTripcounts},
      {"byteCost", s.byteCost},
  };
}

ConverterSpec converterSpecFromJson(const nlohmann::json &j) {
  ConverterSpec s;
  s.bufShape = j.at("bufShape").get<std::vector<int64_t>>();
  s.sharedLoopDepth = j.at("sharedLoopDepth").get<int>();
  s.sharedLoopTripcounts = j.at("sharedLoopTripcounts").get<std::vector<int64_t>>();
  s.byteCost = j.at("byteCost").get<int64_t>();
  return s;
}

bool sharedLevel(const ITensorType &src, const ITensorType &dst, int level) {
  if (level >= src.iterRank() || level >= dst.iterRank()) return false;
  if (src.iterTripcounts[level] != dst.iterTripcounts[level]) return false;
  // A single-trip level contributes nothing to ordering or offsets, so it is
  // structurally shared no matter which dim it nominally drives.
  if (src.iterTripcounts[level] == 1) return true;
  return src.drivenDim(level) == dst.drivenDim(level);
}

namespace {

int sharedPrefixDepth(const ITensorType &src, const ITensorType &dst) {
  int depth = 0;
  while (sharedLevel(src, dst, depth)) ++depth;
  return depth;
}

int64_t volume(const std::vector<int64_t> &shape) {
  int64_t v = 1;
  for (int64_t e : shape) v *= e;
  return v;
}

ConverterSpec finishSpec(const ITensorType &src, std::vector<int64_t> bufShape,
                         int depth) {
  ConverterSpec spec;
  spec.bufShape = std::move(bufShape);
  spec.sharedLoopDepth = depth;
  spec.sharedLoopTripcounts.assign(src.iterTripcounts.begin(),
                                   src.iterTripcounts.begin() + depth);
  spec.byteCost = 2 * volume(spec.bufShape) * src.elementKind.byteWidth;
  return spec;
}

// Alg-literal variant: walk data dims from 0, stop at the first mismatch,
// then drop shared loops that are not an outermost prefix.
ConverterSpec inferPrefixScan(const ITensorType &src, const ITensorType &dst) {
  std::vector<int64_t> bufShape;
  std::vector<int> sharedLoops;
  int beforeLoop = 0;
  for (int d = 0; d < src.rank(); ++d) {
    if (src.elementShape[d] != dst.elementShape[d]) break;
    if (src.dimSource[d] != dst.dimSource[d]) break;
    bufShape.push_back(src.elementShape[d]);
    sharedLoops.push_back(src.dimSource[d]);
    ++beforeLoop;
  }
  while (!sharedLoops.empty() &&
         *std::max_element(sharedLoops.begin(), sharedLoops.end()) >= beforeLoop) {
    bufShape.pop_back();
    sharedLoops.pop_back();
    --beforeLoop;
  }
  for (int d = static_cast<int>(bufShape.size()); d < src.rank(); ++d)
    bufShape.push_back(src.dataShape[d]);
  return finishSpec(src, std::move(bufShape), beforeLoop);
}

}  // namespace

ConverterSpec inferConverter(const ITensorType &src, const ITensorType &dst,
                             const ConverterOptions &opts) {
  validateOrThrow(src);
  validateOrThrow(dst);
  if (!compatibleData(src, dst))
    throw std::invalid_argument("inferConverter: types view different tensors");
  if (typesMatch(src, dst))
    throw std::invalid_argument("inferConverter: identical types need no converter");
  if (opts.prefixScanOnly) return inferPrefixScan(src, dst);

  int depth = sharedPrefixDepth(src, dst);
  std::vector<int64_t> bufShape(src.rank());
  for (int d = 0; d < src.rank(); ++d) {
    bool reducible = src.elementShape[d] == dst.elementShape[d] &&
                     src.dimSource[d] == dst.dimSource[d] &&
                     src.dimSource[d] < depth;
    bufShape[d] = reducible ? src.elementShape[d] : src.dataShape[d];
  }
  return finishSpec(src, std::move(bufShape), depth);
}

namespace {

struct GroupScan {
  // Per group, the set of scalar indices written/read, plus per-dim spans.
  struct Span {
    int64_t lo, hi;  // [lo, hi) in elements
  };
  std::vector<std::set<int64_t>> covered;     // per group, flattened scalars
  std::vector<std::vector<Span>> spans;       // per group, per dim
};

int64_t flatten(const std::vector<int64_t> &idx,
                const std::vector<int64_t> &shape) {
  int64_t f = 0;
  for (size_t d = 0; d < shape.size(); ++d) f = f * shape[d] + idx[d];
  return f;
}

// Walks the access steps of `t`, slicing by the first `depth` iteration
// counters. Returns one entry per group, in stream order.
GroupScan scanGroups(const ITensorType &t, int depth) {
  GroupScan scan;
  int64_t groupCount = 1;
  for (int l = 0; l < depth; ++l) groupCount *= t.iterTripcounts[l];
  scan.covered.resize(groupCount);
  scan.spans.resize(groupCount);

  auto steps = accessSteps(t);
  std::vector<int64_t> idx(t.rank());
  for (auto &step : steps) {
    int64_t g = 0;
    for (int l = 0; l < depth; ++l)
      g = g * t.iterTripcounts[l] + step.iterIndex[l];
    auto &spans = scan.spans[g];
    if (spans.empty())
      for (int d = 0; d < t.rank(); ++d)
        spans.push_back({step.offset[d], step.offset[d] + t.elementShape[d]});
    // enumerate scalars of this token
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      std::vector<int64_t> abs(t.rank());
      for (int d = 0; d < t.rank(); ++d) abs[d] = step.offset[d] + idx[d];
      scan.covered[g].insert(flatten(abs, t.dataShape));
      int d = t.rank() - 1;
      while (d >= 0) {
        if (++idx[d] < t.elementShape[d]) break;
        idx[d] = 0;
        --d;
      }
      if (d < 0) break;
    }
    for (int d = 0; d < t.rank(); ++d) {
      spans[d].lo = std::min(spans[d].lo, step.offset[d]);
      spans[d].hi = std::max(spans[d].hi, step.offset[d] + t.elementShape[d]);
    }
  }
  return scan;
}

}  // namespace

std::optional<ConverterCounterexample> verifyConverter(
    const ITensorType &src, const ITensorType &dst, const ConverterSpec &spec) {
  validateOrThrow(src);
  validateOrThrow(dst);
  int depth = spec.sharedLoopDepth;
  auto fail = [&](std::vector<int64_t> iter, std::vector<int64_t> off,
                  std::string why) {
    return std::optional<ConverterCounterexample>{
        {std::move(iter), std::move(off), std::move(why)}};
  };
  if (depth < 0 || depth > src.iterRank() || depth > dst.iterRank())
    return fail({}, {}, "shared loop depth exceeds iteration rank");
  for (int l = 0; l < depth; ++l)
    if (src.iterTripcounts[l] != dst.iterTripcounts[l])
      return fail({static_cast<int64_t>(l)}, {},
                  "shared loop tripcounts differ between producer and consumer");

  auto prod = scanGroups(src, depth);
  auto cons = scanGroups(dst, depth);

  // recover the counter tuple of group g for error reporting
  auto groupIter = [&](int64_t g) {
    std::vector<int64_t> it(depth);
    for (int l = depth - 1; l >= 0; --l) {
      it[l] = g % src.iterTripcounts[l];
      g /= src.iterTripcounts[l];
    }
    return it;
  };

  std::set<int64_t> allWritten;
  for (size_t g = 0; g < prod.covered.size(); ++g) {
    // every consumer read must hit data the producer placed in this group's
    // buffer half
    for (int64_t scalar : cons.covered[g]) {
      if (!prod.covered[g].count(scalar)) {
        std::vector<int64_t> off(src.rank());
        int64_t rem = scalar;
        for (int d = src.rank() - 1; d >= 0; --d) {
          off[d] = rem % src.dataShape[d];
          rem /= src.dataShape[d];
        }
        return fail(groupIter(g), off, "read of element never written in this shared iteration");
      }
    }
    // the buffer window must hold the whole group slice
    for (int d = 0; d < src.rank(); ++d) {
      int64_t lo = prod.spans[g][d].lo, hi = prod.spans[g][d].hi;
      if (!cons.covered[g].empty()) {
        lo = std::min(lo, cons.spans[g][d].lo);
        hi = std::max(hi, cons.spans[g][d].hi);
      }
      if (hi - lo > spec.bufShape[d])
        return fail(groupIter(g), {lo, hi},
                    "group slice exceeds buffer extent on dim " + std::to_string(d));
    }
    allWritten.insert(prod.covered[g].begin(), prod.covered[g].end());
  }
  if (static_cast<int64_t>(allWritten.size()) != src.dataVolume())
    return fail({}, {}, "producer stream does not cover the tensor");
  return std::nullopt;
}

std::vector<int64_t> minimalBufferBruteforce(const ITensorType &src,
                                             const ITensorType &dst,
                                             int64_t elementCap) {
  validateOrThrow(src);
  validateOrThrow(dst);
  if (src.dataVolume() > elementCap)
    throw std::invalid_argument("minimalBufferBruteforce: tensor exceeds cap");
  if (typesMatch(src, dst)) return src.elementShape;  // pass-through

  int maxDepth = sharedPrefixDepth(src, dst);
  // probe deeper alignments too: groups stay in lockstep whenever tripcounts
  // agree, even if the structural rule calls the level unshared
  while (maxDepth < std::min(src.iterRank(), dst.iterRank()) &&
         src.iterTripcounts[maxDepth] == dst.iterTripcounts[maxDepth])
    ++maxDepth;

  std::vector<int64_t> best;
  int64_t bestVol = -1;
  for (int depth = maxDepth; depth >= 0; --depth) {
    // candidate shape = tightest per-dim window at this depth, rounded up
    // to a whole number of elements; feasible iff all reads are covered
    std::vector<int64_t> shape(src.rank());
    {
      auto prod = scanGroups(src, depth);
      auto cons = scanGroups(dst, depth);
      bool feasible = true;
      for (size_t g = 0; g < prod.covered.size() && feasible; ++g)
        for (int64_t scalar : cons.covered[g])
          if (!prod.covered[g].count(scalar)) {
            feasible = false;
            break;
          }
      if (!feasible) continue;
      for (int d = 0; d < src.rank(); ++d) {
        int64_t w = 0;
        for (size_t g = 0; g < prod.covered.size(); ++g) {
          int64_t lo = prod.spans[g][d].lo, hi = prod.spans[g][d].hi;
          if (!cons.covered[g].empty()) {
            lo = std::min(lo, cons.spans[g][d].lo);
            hi = std::max(hi, cons.spans[g][d].hi);
          }
          w = std::max(w, hi - lo);
        }
        int64_t unit = src.elementShape[d];
        shape[d] = std::max<int64_t>((w + unit - 1) / unit, 1) * unit;
      }
    }
    int64_t vol = volume(shape);
    if (bestVol < 0 || vol < bestVol || (vol == bestVol && shape < best)) {
      bestVol = vol;
      best = shape;
    }
  }
  return best;
}

}  // namespace streamflow
