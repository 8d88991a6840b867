#include <doctest.h>

#include "streamflow/lp.hpp"

using namespace streamflow;

TEST_CASE("simple bounded minimum") {
  // min x0 + x1  s.t.  x0 + x1 >= 2, x0 >= 0.5
  LinearProgram lp;
  lp.a = {{1, 1}, {1, 0}};
  lp.b = {2, 0.5};
  lp.c = {1, 1};
  auto s = solveLp(lp);
  REQUIRE(s);
  CHECK(s->objective == doctest::Approx(2.0));
}

TEST_CASE("negative objective coefficients still bounded by constraints") {
  // min -x0  s.t.  -x0 >= -3  (i.e. x0 <= 3)
  LinearProgram lp;
  lp.a = {{-1}};
  lp.b = {-3};
  lp.c = {-1};
  auto s = solveLp(lp);
  REQUIRE(s);
  CHECK(s->x[0] == doctest::Approx(3.0));
  CHECK(s->objective == doctest::Approx(-3.0));
}

TEST_CASE("infeasible program returns nullopt") {
  // x0 >= 2 and x0 <= 1
  LinearProgram lp;
  lp.a = {{1}, {-1}};
  lp.b = {2, -1};
  lp.c = {1};
  CHECK(!solveLp(lp));
}

TEST_CASE("unbounded program returns nullopt") {
  // min -x0  s.t.  x0 >= 0 (implicit)
  LinearProgram lp;
  lp.a = {{1}};
  lp.b = {0};
  lp.c = {-1};
  CHECK(!solveLp(lp));
}

TEST_CASE("difference-constraint system has integral optimum") {
  // min t1 + t2 - 2 t0  s.t.  t1 - t0 >= 2, t2 - t1 >= 3, t0 pinned 0
  LinearProgram lp;
  lp.a = {{-1, 1, 0}, {0, -1, 1}, {-1, 0, 0}};
  lp.b = {2, 3, 0};
  lp.c = {-2, 1, 1};
  auto s = solveLp(lp);
  REQUIRE(s);
  CHECK(s->x[0] == doctest::Approx(0.0));
  CHECK(s->x[1] == doctest::Approx(2.0));
  CHECK(s->x[2] == doctest::Approx(5.0));
}

TEST_CASE("degenerate constraints do not cycle") {
  LinearProgram lp;
  lp.a = {{1, 1}, {1, 1}, {1, 0}, {0, 1}};
  lp.b = {1, 1, 0, 0};
  lp.c = {1, 2};
  auto s = solveLp(lp);
  REQUIRE(s);
  CHECK(s->objective == doctest::Approx(1.0));
}
