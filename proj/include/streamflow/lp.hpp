#pragma once

#include <optional>
#include <vector>

namespace streamflow {

/// min c·x  s.t.  A x >= b,  x >= 0.
struct LinearProgram {
  std::vector<std::vector<double>> a;  // one row per constraint
  std::vector<double> b;
  std::vector<double> c;
};

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
};

/// Dense two-phase simplex with Bland's rule (always terminates). Returns
/// nullopt when the program is infeasible or unbounded.
std::optional<LpSolution> solveLp(const LinearProgram &lp);

}  // namespace streamflow
