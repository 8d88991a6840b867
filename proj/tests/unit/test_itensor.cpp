#include <doctest.h>

#include "streamflow/itensor.hpp"

using namespace streamflow;

namespace {

ITensorType baseView() {
  ITensorType t;
  t.dataShape = {8, 8};
  t.elementShape = {4, 2};
  t.iterTripcounts = {4, 2};
  t.iterSteps = {2, 4};
  t.dimSource = {1, 0};
  return t;
}

ITensorType reiterView() {
  ITensorType t;
  t.dataShape = {8, 8};
  t.elementShape = {4, 2};
  t.iterTripcounts = {4, 2, 2};
  t.iterSteps = {2, 1, 4};
  t.dimSource = {2, 0};
  return t;
}

}  // namespace

TEST_CASE("column-major tiled layout validates") {
  CHECK(!validate(baseView()));
  CHECK(!validate(reiterView()));
}

TEST_CASE("validation rejects broken layouts") {
  auto t = baseView();
  t.dimSource = {0, 0};  // not injective
  CHECK(validate(t));

  t = baseView();
  t.iterSteps = {3, 4};  // step != elementShape on the driving level
  CHECK(validate(t));

  t = baseView();
  t.dataShape = {8, 7};  // trips * step mismatch
  CHECK(validate(t));

  t = baseView();
  t.dimSource = {5, 0};  // out-of-range level
  CHECK(validate(t));

  CHECK(validate(ITensorType{}));  // rank-0 everything is rejected
}

TEST_CASE("access sequence of the column-major tiled layout") {
  std::vector<std::vector<int64_t>> want = {{0, 0}, {4, 0}, {0, 2}, {4, 2},
                                            {0, 4}, {4, 4}, {0, 6}, {4, 6}};
  CHECK(accessSequence(baseView()) == want);
  CHECK(tokenCount(baseView()) == 8);
}

TEST_CASE("re-iteration replays the inner stream") {
  auto seq = accessSequence(reiterView());
  REQUIRE(seq.size() == 16);
  CHECK(tokenCount(reiterView()) == 16);
  std::vector<std::vector<int64_t>> head = {{0, 0}, {4, 0}, {0, 0}, {4, 0},
                                            {0, 2}};
  for (size_t i = 0; i < head.size(); ++i) CHECK(seq[i] == head[i]);
}

TEST_CASE("type matching and data compatibility") {
  CHECK(typesMatch(baseView(), baseView()));
  CHECK(!typesMatch(baseView(), reiterView()));
  CHECK(compatibleData(baseView(), reiterView()));

  auto other = baseView();
  other.elementKind = {"i8", 1};
  CHECK(!compatibleData(baseView(), other));
}

TEST_CASE("printing round-trips through the parser") {
  for (auto &t : {baseView(), reiterView()}) {
    auto text = printType(t);
    CHECK(parseType(text) == t);
  }
  CHECK(printType(baseView()) ==
        "itensor<4x2xf32, space [4,2]*[2,4], map (d0,d1)->(d1,d0)>");
}

TEST_CASE("parser accepts the documented textual form") {
  auto t = parseType("itensor<4x2xf32, space [4,2]*[2,4], map (d0,d1)->(d1,d0)>");
  CHECK(t == baseView());
  CHECK_THROWS(parseType("itensor<4x2xf32, space [4,2]*[3,4], map (d0,d1)->(d1,d0)>"));
  CHECK_THROWS(parseType("not a type"));
}

TEST_CASE("json round-trip") {
  for (auto &t : {baseView(), reiterView()}) CHECK(typeFromJson(toJson(t)) == t);
}

TEST_CASE("vectorize regroups along a data dim") {
  auto t = baseView();
  auto v = vectorizeType(t, {1, 2});  // widen dim 1, driven by level 0
  CHECK(v.elementShape == std::vector<int64_t>{4, 4});
  CHECK(v.iterTripcounts == std::vector<int64_t>{2, 2});
  CHECK(tokenCount(v) == 4);
  CHECK(v.dataShape == t.dataShape);
  CHECK(!validate(v));
  CHECK_THROWS(vectorizeType(t, {3, 1}));  // does not divide
}

TEST_CASE("token and tensor byte accounting") {
  auto t = baseView();
  CHECK(t.elementVolume() == 8);
  CHECK(t.dataVolume() == 64);
  CHECK(t.tokenBytes() == 32);
  CHECK(t.tensorBytes() == 256);
}
