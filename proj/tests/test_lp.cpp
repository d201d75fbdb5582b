#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "ntd/linalg.hpp"
#include "ntd/lp.hpp"

using namespace ntd;

namespace {

LinearProgram box_lp(const Vec& c, double lo, double hi) {
  const Index n = c.size();
  LinearProgram lp;
  lp.c = c;
  lp.G.resize(2 * n, n);
  lp.G << Mat::Identity(n, n), -Mat::Identity(n, n);
  lp.h.resize(2 * n);
  lp.h << Vec::Constant(n, lo), Vec::Constant(n, -hi);
  lp.E.resize(0, n);
  lp.f.resize(0);
  return lp;
}

// Best objective over all basic solutions of G x >= h (x free, full column rank G).
double brute_force_max(const LinearProgram& lp) {
  const Index m = lp.G.rows(), n = lp.G.cols();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<bool> pick(static_cast<std::size_t>(m), false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    Mat a(n, n);
    Vec b(n);
    Index k = 0;
    for (Index i = 0; i < m; ++i)
      if (pick[static_cast<std::size_t>(i)]) {
        a.row(k) = lp.G.row(i);
        b(k++) = lp.h(i);
      }
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) continue;
    const Vec x = lu.solve(b);
    if (((lp.G * x - lp.h).array() < -1e-9).any()) continue;
    best = std::max(best, lp.c.dot(x));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST(Lp, BoxMaximumAtCorner) {
  Vec c(3);
  c << 1, -2, 0.5;
  const auto r = solve_lp(box_lp(c, -1, 2));
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.value, 2 + 2 + 1, 1e-12);
  EXPECT_NEAR(r.x(0), 2, 1e-12);
  EXPECT_NEAR(r.x(1), -1, 1e-12);
  EXPECT_NEAR(r.x(2), 2, 1e-12);
}

TEST(Lp, EqualityConstrainedSimplex) {
  // max x2 on the probability simplex in R^3.
  LinearProgram lp;
  lp.c = Vec::Unit(3, 2);
  lp.G = Mat::Identity(3, 3);
  lp.h = Vec::Zero(3);
  lp.E = Mat::Ones(1, 3);
  lp.f = Vec::Ones(1);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.value, 1, 1e-12);
  EXPECT_LE((r.x - Vec::Unit(3, 2)).norm(), 1e-12);
}

TEST(Lp, DetectsInfeasibility) {
  LinearProgram lp;
  lp.c = Vec::Ones(1);
  lp.G.resize(2, 1);
  lp.G << 1, -1;
  lp.h.resize(2);
  lp.h << 2, -1;  // x >= 2 and x <= 1
  lp.E.resize(0, 1);
  lp.f.resize(0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::infeasible);

  lp.G.resize(1, 1);
  lp.G << 1;
  lp.h.resize(1);
  lp.h << 0;
  lp.E = Mat::Ones(1, 1);
  lp.f = -Vec::Ones(1);  // x = -1 with x >= 0
  EXPECT_EQ(solve_lp(lp).status, LpStatus::infeasible);
}

TEST(Lp, UnboundedReturnsImprovingRay) {
  LinearProgram lp;
  lp.c.resize(2);
  lp.c << 1, 1;
  lp.G.resize(2, 2);
  lp.G << 1, 0, 0, 1;
  lp.h = Vec::Zero(2);
  lp.E.resize(1, 2);
  lp.E << 1, -1;
  lp.f = Vec::Zero(1);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::unbounded);
  EXPECT_GT(lp.c.dot(r.ray), 0);
  EXPECT_GE((lp.G * r.ray).minCoeff(), -1e-12);
  EXPECT_LE((lp.E * r.ray).norm(), 1e-12);
  EXPECT_GE((lp.G * r.x - lp.h).minCoeff(), -1e-12);
}

TEST(Lp, DegenerateVertexDoesNotCycle) {
  // Many constraints through the optimal vertex (0,0,0).
  Rng rng(3);
  LinearProgram lp;
  lp.c = -Vec::Ones(3);
  lp.G = gaussian_matrix(40, 3, rng).cwiseAbs();
  lp.h = Vec::Zero(40);
  lp.E.resize(0, 3);
  lp.f.resize(0);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.value, 0, 1e-12);
}

TEST(Lp, MatchesVertexEnumerationOnRandomPolytopes) {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 3, m = 9;
    LinearProgram lp;
    lp.c = gaussian_vector(n, rng);
    lp.G = gaussian_matrix(m, n, rng);
    lp.h = -Vec::Ones(m) - gaussian_vector(m, rng).cwiseAbs();  // origin strictly feasible
    lp.E.resize(0, n);
    lp.f.resize(0);
    const auto r = solve_lp(lp);
    if (r.status == LpStatus::unbounded) {
      EXPECT_GT(lp.c.dot(r.ray), 0);
      EXPECT_GE((lp.G * r.ray).minCoeff(), -1e-10);
      continue;
    }
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.value, brute_force_max(lp), 1e-8);
    EXPECT_GE((lp.G * r.x - lp.h).minCoeff(), -1e-9);
  }
}
