#include "streamflow/itensor.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace streamflow {

int64_t ITensorType::elementVolume() const {
  int64_t v = 1;
  for (int64_t e : elementShape) v *= e;
  return v;
}

int64_t ITensorType::dataVolume() const {
  int64_t v = 1;
  for (int64_t e : dataShape) v *= e;
  return v;
}

bool ITensorType::drivesData(int level) const { return drivenDim(level) >= 0; }

int ITensorType::drivenDim(int level) const {
  for (int d = 0; d < rank(); ++d)
    if (dimSource[d] == level) return d;
  return -1;
}

std::optional<Violation> validate(const ITensorType &t) {
  auto fail = [](std::string m) { return std::optional<Violation>{{std::move(m)}}; };
  if (t.elementKind.byteWidth < 1) return fail("element byte width must be >= 1");
  if (t.dataShape.empty()) return fail("data shape must be non-empty");
  if (t.elementShape.size() != t.dataShape.size() ||
      t.dimSource.size() != t.dataShape.size())
    return fail("dataShape, elementShape, and dimSource must have equal rank");
  if (t.iterSteps.size() != t.iterTripcounts.size())
    return fail("iterSteps and iterTripcounts must have equal length");
  for (int64_t e : t.dataShape)
    if (e <= 0) return fail("data extents must be positive");
  for (int64_t e : t.elementShape)
    if (e <= 0) return fail("element extents must be positive");
  for (int64_t e : t.iterTripcounts)
    if (e <= 0) return fail("iteration tripcounts must be positive");
  for (int64_t e : t.iterSteps)
    if (e < 0) return fail("iteration steps must be non-negative");

  std::vector<bool> seen(t.iterTripcounts.size(), false);
  for (int d = 0; d < t.rank(); ++d) {
    int src = t.dimSource[d];
    if (src < 0 || src >= t.iterRank())
      return fail("dimSource[" + std::to_string(d) + "] out of range");
    if (seen[src])
      return fail("dimSource is not injective: level " + std::to_string(src) +
                  " drives more than one data dim");
    seen[src] = true;
  }
  for (int d = 0; d < t.rank(); ++d) {
    int src = t.dimSource[d];
    if (t.elementShape[d] > t.dataShape[d] ||
        t.dataShape[d] % t.elementShape[d] != 0)
      return fail("elementShape[" + std::to_string(d) +
                  "] does not divide dataShape");
    if (t.iterSteps[src] != t.elementShape[d])
      return fail("step of driving level " + std::to_string(src) +
                  " must equal elementShape[" + std::to_string(d) + "]");
    if (t.iterTripcounts[src] * t.iterSteps[src] != t.dataShape[d])
      return fail("tripcount*step of level " + std::to_string(src) +
                  " must equal dataShape[" + std::to_string(d) + "]");
  }
  return std::nullopt;
}

void validateOrThrow(const ITensorType &t) {
  if (auto v = validate(t))
    throw std::invalid_argument("invalid itensor type: " + v->message);
}

int64_t tokenCount(const ITensorType &t) {
  int64_t n = 1;
  for (int64_t tc : t.iterTripcounts) n *= tc;
  return n;
}

std::vector<AccessStep> accessSteps(const ITensorType &t) {
  validateOrThrow(t);
  int levels = t.iterRank();
  std::vector<AccessStep> out;
  out.reserve(tokenCount(t));
  std::vector<int64_t> counter(levels, 0);
  for (;;) {
    AccessStep step;
    step.iterIndex = counter;
    step.offset.resize(t.rank());
    for (int d = 0; d < t.rank(); ++d) {
      int src = t.dimSource[d];
      step.offset[d] = counter[src] * t.iterSteps[src];
    }
    out.push_back(std::move(step));
    // advance, innermost fastest
    int lvl = levels - 1;
    while (lvl >= 0) {
      if (++counter[lvl] < t.iterTripcounts[lvl]) break;
      counter[lvl] = 0;
      --lvl;
    }
    if (lvl < 0) break;
  }
  return out;
}

std::vector<std::vector<int64_t>> accessSequence(const ITensorType &t) {
  std::vector<std::vector<int64_t>> out;
  for (auto &s : accessSteps(t)) out.push_back(s.offset);
  return out;
}

bool typesMatch(const ITensorType &a, const ITensorType &b) { return a == b; }

bool compatibleData(const ITensorType &a, const ITensorType &b) {
  return a.dataShape == b.dataShape && a.elementKind == b.elementKind;
}

ITensorType vectorizeType(const ITensorType &t,
                          const std::vector<int64_t> &factors) {
  validateOrThrow(t);
  if (factors.size() != t.dataShape.size())
    throw std::invalid_argument("vectorize: one factor per data dim required");
  ITensorType r = t;
  for (int d = 0; d < t.rank(); ++d) {
    int64_t f = factors[d];
    if (f <= 0) throw std::invalid_argument("vectorize: factors must be positive");
    if (f == 1) continue;
    int src = t.dimSource[d];
    if (r.iterTripcounts[src] % f != 0)
      throw std::invalid_argument("vectorize: factor " + std::to_string(f) +
                                  " does not divide tripcount of level " +
                                  std::to_string(src));
    r.iterTripcounts[src] /= f;
    r.iterSteps[src] *= f;
    r.elementShape[d] *= f;
  }
  validateOrThrow(r);
  return r;
}

namespace {

const std::map<std::string, int> &kindWidths() {
  static const std::map<std::string, int> table = {
      {"f64", 8}, {"f32", 4}, {"f16", 2}, {"bf16", 2}, {"i64", 8},
      {"i32", 4}, {"i16", 2}, {"i8", 1},  {"u8", 1},   {"u16", 2},
      {"u32", 4}, {"u64", 8},
  };
  return table;
}

std::string joinDims(const std::vector<int64_t> &v, const char *sep) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

struct Cursor {
  const std::string &s;
  size_t pos = 0;

  void skipWs() {
    while (pos < s.size() && isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(const std::string &tok) {
    skipWs();
    if (s.compare(pos, tok.size(), tok) == 0) {
      pos += tok.size();
      return true;
    }
    return false;
  }
  void expect(const std::string &tok) {
    if (!eat(tok))
      throw std::invalid_argument("itensor parse: expected '" + tok +
                                  "' at offset " + std::to_string(pos));
  }
  int64_t number() {
    skipWs();
    size_t start = pos;
    while (pos < s.size() && isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start)
      throw std::invalid_argument("itensor parse: expected number at offset " +
                                  std::to_string(start));
    return std::stoll(s.substr(start, pos - start));
  }
  std::string ident() {
    skipWs();
    size_t start = pos;
    while (pos < s.size() && (isalnum(static_cast<unsigned char>(s[pos]))))
      ++pos;
    return s.substr(start, pos - start);
  }
  std::vector<int64_t> bracketList() {
    expect("[");
    std::vector<int64_t> v;
    v.push_back(number());
    while (eat(",")) v.push_back(number());
    expect("]");
    return v;
  }
};

}  // namespace

std::string printType(const ITensorType &t) {
  std::ostringstream os;
  os << "itensor<" << joinDims(t.elementShape, "x") << "x" << t.elementKind.name
     << ", space [" << joinDims(t.iterTripcounts, ",") << "]*["
     << joinDims(t.iterSteps, ",") << "], map (";
  for (int i = 0; i < t.iterRank(); ++i) {
    if (i) os << ",";
    os << "d" << i;
  }
  os << ")->(";
  for (int d = 0; d < t.rank(); ++d) {
    if (d) os << ",";
    os << "d" << t.dimSource[d];
  }
  os << ")>";
  return os.str();
}

ITensorType parseType(const std::string &text) {
  Cursor c{text};
  c.expect("itensor");
  c.expect("<");
  ITensorType t;
  // element shape then kind, separated by 'x': e.g. 4x2xf32
  t.elementShape.push_back(c.number());
  for (;;) {
    c.expect("x");
    c.skipWs();
    if (c.pos < text.size() && isdigit(static_cast<unsigned char>(text[c.pos]))) {
      t.elementShape.push_back(c.number());
      continue;
    }
    std::string kind = c.ident();
    auto it = kindWidths().find(kind);
    if (it == kindWidths().end())
      throw std::invalid_argument("itensor parse: unknown element kind '" +
                                  kind + "'");
    t.elementKind = {kind, it->second};
    break;
  }
  c.expect(",");
  c.expect("space");
  t.iterTripcounts = c.bracketList();
  c.expect("*");
  t.iterSteps = c.bracketList();
  c.expect(",");
  c.expect("map");
  c.expect("(");
  int declared = 0;
  for (;;) {
    c.expect("d");
    if (c.number() != declared)
      throw std::invalid_argument("itensor parse: iteration dims must be d0..dN in order");
    ++declared;
    if (!c.eat(",")) break;
  }
  c.expect(")");
  c.expect("->");
  c.expect("(");
  for (;;) {
    c.expect("d");
    t.dimSource.push_back(static_cast<int>(c.number()));
    if (!c.eat(",")) break;
  }
  c.expect(")");
  c.expect(">");
  if (declared != static_cast<int>(t.iterTripcounts.size()))
    throw std::invalid_argument("itensor parse: map arity does not match iteration space");
  // data shape is implied: driving level tripcount * step per data dim
  t.dataShape.resize(t.dimSource.size());
  for (size_t d = 0; d < t.dimSource.size(); ++d) {
    int src = t.dimSource[d];
    if (src < 0 || src >= static_cast<int>(t.iterTripcounts.size()))
      throw std::invalid_argument("itensor parse: map refers to missing iteration dim");
    t.dataShape[d] = t.iterTripcounts[src] * t.iterSteps[src];
  }
  validateOrThrow(t);
  return t;
}

nlohmann::json toJson(const ITensorType &t) {
  return {
      {"dataShape", t.dataShape},
      {"elementShape", t.elementShape},
      {"iterTripcounts", t.iterTripcounts},
      {"iterSteps", t.iterSteps},
      {"dimSource", t.dimSource},
      {"elementKind",
       {{"name", t.elementKind.name}, {"byteWidth", t.elementKind.byteWidth}}},
  };
}

ITensorType typeFromJson(const nlohmann::json &j) {
  ITensorType t;
  t.dataShape = j.at("dataShape").get<std::vector<int64_t>>();
  t.elementShape = j.at("elementShape").get<std::vector<int64_t>>();
  t.iterTripcounts = j.at("iterTripcounts").get<std::vector<int64_t>>();
  t.iterSteps = j.at("iterSteps").get<std::vector<int64_t>>();
  t.dimSource = j.at("dimSource").get<std::vector<int>>();
  t.elementKind.name = j.at("elementKind").at("name").get<std::string>();
  t.elementKind.byteWidth = j.at("elementKind").at("byteWidth").get<int>();
  return t;
}

}  // namespace streamflow
