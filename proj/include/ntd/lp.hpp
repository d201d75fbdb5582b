#pragma once

#include "ntd/tensor.hpp"

namespace ntd {

// maximize c^T x  subject to  G x >= h,  E x = f,  x free.
struct LinearProgram {
  Vec c;
  Mat G;
  Vec h;
  Mat E;
  Vec f;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vec x;      // optimal point, or a feasible point when unbounded
  Vec ray;    // improving recession direction when unbounded
  double value = 0;
  int pivots = 0;
};

// Two-phase dense tableau simplex. Dantzig pricing with a switch to
// Bland's rule on degenerate stalls, which rules out cycling.
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-10);

}  // namespace ntd
