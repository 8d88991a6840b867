#include "streamflow/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace streamflow {

namespace {

constexpr double kEps = 1e-9;

// Standard-form tableau: min c·x, Ax = b, x >= 0, b >= 0.
// Rows carry the basis; Bland's rule picks the lowest-index entering and
// leaving columns so cycling is impossible.
struct Tableau {
  int m, n;  // constraints, variables (incl. slacks/artificials)
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<int> basis;

  // Runs simplex on objective row `cost` (dense, size n). Returns false on
  // unboundedness.
  bool minimize(std::vector<double> cost) {
    for (;;) {
      // reduced costs: cost[j] - cost_B · B^-1 A_j; the tableau is kept in
      // canonical form, so cost of basics is eliminated first
      std::vector<double> reduced = cost;
      for (int i = 0; i < m; ++i) {
        double cb = cost[basis[i]];
        if (std::abs(cb) < kEps) continue;
        for (int j = 0; j < n; ++j) reduced[j] -= cb * a[i][j];
      }
      int enter = -1;
      for (int j = 0; j < n; ++j)
        if (reduced[j] < -kEps) {
          enter = j;
          break;  // Bland: lowest index
        }
      if (enter < 0) return true;  // optimal
      int leave = -1;
      double bestRatio = 0;
      for (int i = 0; i < m; ++i) {
        if (a[i][enter] <= kEps) continue;
        double ratio = b[i] / a[i][enter];
        if (leave < 0 || ratio < bestRatio - kEps ||
            (ratio < bestRatio + kEps && basis[i] < basis[leave])) {
          leave = i;
          bestRatio = ratio;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
  }

  void pivot(int row, int col) {
    double p = a[row][col];
    for (int j = 0; j < n; ++j) a[row][j] /= p;
    b[row] /= p;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = a[i][col];
      if (std::abs(f) < kEps) continue;
      for (int j = 0; j < n; ++j) a[i][j] -= f * a[row][j];
      b[i] -= f * b[row];
    }
    basis[row] = col;
  }
};

}  // namespace

std::optional<LpSolution> solveLp(const LinearProgram &lp) {
  int m = static_cast<int>(lp.a.size());
  int nOrig = static_cast<int>(lp.c.size());
  for (auto &row : lp.a)
    if (static_cast<int>(row.size()) != nOrig)
      throw std::invalid_argument("solveLp: ragged constraint matrix");
  if (static_cast<int>(lp.b.size()) != m)
    throw std::invalid_argument("solveLp: rhs size mismatch");

  // A x >= b  →  A x − s = b, s >= 0; flip rows to make rhs non-negative,
  // then add one artificial per row for phase 1.
  int n = nOrig + m /*surplus*/ + m /*artificial*/;
  Tableau t;
  t.m = m;
  t.n = n;
  t.a.assign(m, std::vector<double>(n, 0.0));
  t.b.assign(m, 0.0);
  t.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    double sign = lp.b[i] >= 0 ? 1.0 : -1.0;
    for (int j = 0; j < nOrig; ++j) t.a[i][j] = sign * lp.a[i][j];
    t.a[i][nOrig + i] = sign * -1.0;  // surplus
    t.a[i][nOrig + m + i] = 1.0;      // artificial
    t.b[i] = sign * lp.b[i];
    t.basis[i] = nOrig + m + i;
  }

  std::vector<double> phase1(n, 0.0);
  for (int i = 0; i < m; ++i) phase1[nOrig + m + i] = 1.0;
  if (!t.minimize(phase1)) return std::nullopt;
  double infeas = 0;
  for (int i = 0; i < m; ++i)
    if (t.basis[i] >= nOrig + m) infeas += t.b[i];
  if (infeas > 1e-6) return std::nullopt;

  // Drive any degenerate artificials out of the basis, or drop their rows.
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] < nOrig + m) continue;
    int col = -1;
    for (int j = 0; j < nOrig + m; ++j)
      if (std::abs(t.a[i][j]) > kEps) {
        col = j;
        break;
      }
    if (col >= 0) t.pivot(i, col);
  }
  // Forbid artificials from re-entering in phase 2.
  for (int i = 0; i < m; ++i)
    for (int j = nOrig + m; j < n; ++j) t.a[i][j] = 0.0;

  std::vector<double> phase2(n, 0.0);
  for (int j = 0; j < nOrig; ++j) phase2[j] = lp.c[j];
  if (!t.minimize(phase2)) return std::nullopt;

  LpSolution sol;
  sol.x.assign(nOrig, 0.0);
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < nOrig) sol.x[t.basis[i]] = t.b[i];
  for (int j = 0; j < nOrig; ++j) sol.objective += lp.c[j] * sol.x[j];
  return sol;
}

}  // namespace streamflow
