#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ntd/cone.hpp"
#include "ntd/kron.hpp"
#include "test_util.hpp"

using namespace ntd;
using ntd::testing::random_stochastic;

namespace {

// Rows (0, a, 1-a) under all six coordinate permutations.
Mat hexagon(double a) {
  Mat h(6, 3);
  h << 0, a, 1 - a, 0, 1 - a, a, a, 0, 1 - a, 1 - a, 0, a, a, 1 - a, 0, 1 - a, a, 0;
  return h;
}

// Every basic solution of {H_S y = 0, e^T y = 1} with |S| = r-1 that is
// feasible for H y >= 0.
std::vector<Vec> brute_force_vertices(const Mat& h) {
  const Index n = h.rows(), r = h.cols();
  std::vector<Vec> out;
  std::vector<bool> pick(static_cast<std::size_t>(n), false);
  std::fill(pick.begin(), pick.begin() + (r - 1), true);
  do {
    Mat a(r, r);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
      if (pick[static_cast<std::size_t>(i)]) a.row(k++) = h.row(i);
    a.row(r - 1).setOnes();
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) continue;
    const Vec y = lu.solve(Vec::Unit(r, r - 1));
    if ((h * y).minCoeff() < -1e-9 * std::max(1.0, y.norm())) continue;
    bool dup = false;
    for (const auto& v : out) dup = dup || (v - y).norm() < 1e-8;
    if (!dup) out.push_back(y);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

bool same_vertex_sets(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (const auto& v : a) {
    bool found = false;
    for (const auto& w : b) found = found || (v - w).norm() <= tol;
    if (!found) return false;
  }
  return true;
}

// min v^T x over the simplex intersected with ||x|| <= 1/p, r = 3, by
// sampling the boundary: circle arcs inside the simplex plus edge segments.
double sampled_min_inner3(const Vec& v, double p) {
  const Vec c = Vec::Constant(3, 1.0 / 3.0);
  Vec b1(3), b2(3);
  b1 << 1, -1, 0;
  b1.normalize();
  b2 << 1, 1, -2;
  b2.normalize();
  const double rho = std::sqrt(std::max(0.0, 1.0 / (p * p) - 1.0 / 3.0));
  double best = std::numeric_limits<double>::infinity();
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * k / n;
    const Vec x = c + rho * (std::cos(t) * b1 + std::sin(t) * b2);
    if (x.minCoeff() >= 0) best = std::min(best, v.dot(x));
  }
  // On an edge the objective is linear, so only the segment ends matter:
  // s^2 + (1-s)^2 <= 1/p^2 gives |s - 1/2| <= delta.
  const double delta = 0.5 * std::sqrt(std::max(0.0, 2.0 / (p * p) - 1.0));
  for (int e = 0; e < 3; ++e)
    for (double s : {0.5 - delta, 0.5 + delta}) {
      Vec x = Vec::Zero(3);
      x((e + 1) % 3) = std::clamp(s, 0.0, 1.0);
      x((e + 2) % 3) = 1.0 - x((e + 1) % 3);
      best = std::min(best, v.dot(x));
    }
  return best;
}

}  // namespace

TEST(DualCone, IdentityHasUnitVectorVertices) {
  for (Index r = 2; r <= 6; ++r) {
    const auto d = enumerate_dual_vertices(Mat::Identity(r, r));
    EXPECT_TRUE(d.pointed);
    EXPECT_FALSE(d.unbounded);
    std::vector<Vec> units;
    for (Index k = 0; k < r; ++k) units.push_back(Vec::Unit(r, k));
    EXPECT_TRUE(same_vertex_sets(d.vertices, units, 1e-12));
  }
}

TEST(DualCone, MatchesSubsetEnumeration) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Index r = 3 + trial % 3, n = 3 * r + trial % 4;
    // Near-separable rows with random interior rows: bounded, nontrivial dual.
    Mat h(n, r);
    h.topRows(r) = Mat::Identity(r, r) + 0.3 * random_stochastic(r, r, rng).transpose();
    h.bottomRows(n - r) = random_stochastic(r, n - r, rng).transpose();
    const auto d = enumerate_dual_vertices(h);
    ASSERT_FALSE(d.unbounded);
    EXPECT_TRUE(same_vertex_sets(d.vertices, brute_force_vertices(h), 1e-8)) << "trial " << trial;
    for (const auto& v : d.vertices) {
      EXPECT_NEAR(v.sum(), 1.0, 1e-12);
      EXPECT_GE((h * v).minCoeff(), -1e-10);
    }
  }
}

TEST(DualCone, RankDeficientIsUnbounded) {
  Mat h(4, 3);
  h << 1, 1, 0, 2, 2, 0, 0, 0, 1, 1, 1, 1;  // columns 0 and 1 coincide
  const auto d = enumerate_dual_vertices(h);
  EXPECT_FALSE(d.pointed);
  EXPECT_TRUE(d.unbounded);
}

TEST(DualCone, DualRayOffTheSimplexPlaneIsUnbounded) {
  // Only rows near one corner: the dual cone has a ray with e^T y <= 0.
  Mat h(3, 3);
  h << 1, 0.1, 0.1, 0.9, 0.2, 0.1, 0.8, 0.1, 0.3;
  EXPECT_TRUE(enumerate_dual_vertices(h).unbounded);
}

TEST(DualCone, CapIsEnforced) {
  EXPECT_THROW(enumerate_dual_vertices(Mat::Identity(9, 9)), CapExceeded);
  EXPECT_THROW(enumerate_dual_vertices(Mat::Ones(61, 3)), CapExceeded);
}

TEST(Separable, FindsAnchorsAmongExtraRows) {
  Mat h(5, 3);
  h << 0.2, 0.3, 0.5, 0, 4, 0, 0.1, 0.1, 0.8, 0, 0, 2, 3, 0, 0;
  const auto s = check_separable(h);
  ASSERT_TRUE(s.separable);
  EXPECT_EQ(s.anchors, (std::vector<Index>{4, 1, 3}));
  EXPECT_FALSE(check_separable(hexagon(0.2)).separable);
}

TEST(Ssc, IdentityIsSsc) {
  for (Index r = 2; r <= 8; ++r) {
    const auto rep = check_ssc(Mat::Identity(r, r));
    ASSERT_TRUE(rep.ssc().has_value());
    EXPECT_TRUE(*rep.ssc());
    EXPECT_TRUE(rep.separable);
    EXPECT_NEAR(rep.max_vertex_norm, 1.0, 1e-12);
  }
}

TEST(Ssc, HexagonFamily) {
  // The inscribed circle of the simplex meets the line x_k = 1 - a exactly
  // when a = 1/3, so smaller a is strictly SSC and larger a fails SSC1.
  auto strict = check_ssc(hexagon(0.2));
  EXPECT_FALSE(strict.separable);
  EXPECT_EQ(strict.ssc(), std::optional<bool>(true));
  // Only the unit vectors reach the unit sphere.
  EXPECT_NEAR(strict.max_vertex_norm, 1.0, 1e-12);

  auto outside = check_ssc(hexagon(0.4));
  EXPECT_EQ(outside.ssc1, std::optional<bool>(false));
  EXPECT_GT(outside.max_vertex_norm, 1.0);

  auto touching = check_ssc(hexagon(1.0 / 3.0));
  EXPECT_EQ(touching.ssc1, std::optional<bool>(true));
  EXPECT_EQ(touching.ssc2, std::optional<bool>(false));
  EXPECT_NEAR(touching.max_vertex_norm, 1.0, 1e-12);
}

TEST(Ssc, RowsNearBarycenterFail) {
  Rng rng(22);
  const Mat h = Mat::Constant(12, 4, 0.25) + 0.02 * random_stochastic(4, 12, rng).transpose();
  const auto rep = check_ssc(h);
  EXPECT_EQ(rep.ssc(), std::optional<bool>(false));
}

TEST(Ssc, BeyondCapOnlyRefutes) {
  SscOptions opts;
  opts.cap = {2, 60};
  const auto bad = check_ssc(hexagon(0.4), opts);
  EXPECT_EQ(bad.method, SscMethod::refutation_search_only);
  ASSERT_TRUE(bad.refutation.has_value());
  EXPECT_EQ(bad.ssc(), std::optional<bool>(false));

  const auto good = check_ssc(hexagon(0.2), opts);
  EXPECT_EQ(good.method, SscMethod::refutation_search_only);
  EXPECT_FALSE(good.ssc().has_value());
}

TEST(Ssc, NegativeInputRejected) {
  Mat h = Mat::Identity(3, 3);
  h(0, 1) = -0.5;
  EXPECT_THROW(check_ssc(h), PreconditionError);
}

TEST(Refute, CertificatesAreValid) {
  Rng rng(23);
  for (double a : {0.36, 0.4, 0.45, 0.5}) {
    const Mat h = hexagon(a);
    const auto y = ssc1_refute(h, rng);
    ASSERT_TRUE(y.has_value()) << a;
    EXPECT_NEAR(y->sum(), 1.0, 1e-9);
    EXPECT_GE((h * *y).minCoeff(), -1e-9);
    EXPECT_GT(y->norm(), 1.0);
  }
  EXPECT_FALSE(ssc1_refute(Mat::Identity(4, 4), rng).has_value());
}

TEST(CpMinInner, MatchesSampledBoundaryForRankThree) {
  Rng rng(24);
  for (int trial = 0; trial < 8; ++trial) {
    const Vec v = gaussian_vector(3, rng);
    for (double p : {1.0, 1.1, 1.25, std::sqrt(2.0)})
      EXPECT_NEAR(cp_min_inner(v, p), sampled_min_inner3(v, p), 1e-6 * (1 + v.norm()));
  }
}

TEST(CpMinInner, ClosedFormsAtTheEnds) {
  Rng rng(25);
  for (Index r = 3; r <= 7; ++r) {
    const Vec v = gaussian_vector(r, rng);
    // p = 1: the ball covers the simplex, so the minimum sits at a vertex.
    EXPECT_NEAR(cp_min_inner(v, 1.0), v.minCoeff(), 1e-12);
    // p^2 = r - 1: the inscribed ball, minimum along the centered direction.
    const double rho = std::sqrt(1.0 / (r - 1.0) - 1.0 / r);
    const Vec w = v.array() - v.mean();
    EXPECT_NEAR(cp_min_inner(v, std::sqrt(r - 1.0)), v.mean() - rho * w.norm(), 1e-12);
  }
}

TEST(Pssc, IdentityHasMinimalExpansionOne) {
  for (Index r = 2; r <= 6; ++r) {
    EXPECT_TRUE(check_pssc(Mat::Identity(r, r), 1.0));
    EXPECT_DOUBLE_EQ(estimate_min_p(Mat::Identity(r, r)), 1.0);
  }
}

TEST(Pssc, SampledCpBoundaryRecoversItsExpansionFactor) {
  // Rows sampled on the boundary of {x >= 0, e^T x = 1, ||x|| <= 1/q}: their
  // conic hull sits just inside C_q, so the minimal p is slightly above q.
  const double q = 1.2;
  const double rho = std::sqrt(1.0 / (q * q) - 1.0 / 3.0);
  Vec b1(3), b2(3);
  b1 << 1, -1, 0;
  b1.normalize();
  b2 << 1, 1, -2;
  b2.normalize();
  std::vector<Vec> rows;
  for (int k = 0; k < 2000 && rows.size() < 60; ++k) {
    const double t = 2 * std::numbers::pi * k / 2000;
    const Vec x = Vec::Constant(3, 1.0 / 3.0) + rho * (std::cos(t) * b1 + std::sin(t) * b2);
    if (x.minCoeff() >= 0 && k % 30 == 0) rows.push_back(x.cwiseMax(0.0));
  }
  // Endpoints of the arcs lie on the simplex edges.
  for (int e = 0; e < 3; ++e) {
    const double s = 0.5 + 0.5 * std::sqrt(std::max(0.0, 2.0 / (q * q) - 1.0));
    Vec x = Vec::Zero(3);
    x((e + 1) % 3) = s;
    x((e + 2) % 3) = 1 - s;
    rows.push_back(x);
    std::swap(x((e + 1) % 3), x((e + 2) % 3));
    rows.push_back(x);
  }
  ASSERT_LE(rows.size(), 60u);
  Mat h(static_cast<Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) h.row(static_cast<Index>(i)) = rows[i].transpose();
  const double p = estimate_min_p(h);
  EXPECT_GE(p, q - 1e-6);
  EXPECT_LE(p, q + 0.05);
  EXPECT_TRUE(check_pssc(h, std::min(p + 1e-4, std::sqrt(2.0))));
  EXPECT_FALSE(check_pssc(h, q - 0.01));
}

TEST(Pssc, NonSscHasInfiniteExpansion) {
  EXPECT_TRUE(std::isinf(estimate_min_p(hexagon(0.45))));
  const double p = estimate_min_p(hexagon(0.2));
  EXPECT_GT(p, 1.0);
  EXPECT_LE(p, std::sqrt(2.0) + 1e-9);
}

TEST(KronSsc, MarginAtTheBoundary) {
  EXPECT_DOUBLE_EQ(kron_ssc_margin_sq(3, 2.0, 3, 2.0), 1.0);
  EXPECT_TRUE(kron_ssc_sufficient(3, std::sqrt(2.0), 3, std::sqrt(2.0)));
  EXPECT_FALSE(kron_ssc_sufficient(3, std::sqrt(2.0), 4, std::sqrt(3.0)));
  EXPECT_TRUE(kron_ssc_sufficient(5, 1.0, 7, 1.0));
  EXPECT_THROW(kron_ssc_margin_sq(3, 2.5, 3, 1.0), PreconditionError);
}

TEST(KronSsc, CounterexampleDimensions) {
  EXPECT_FALSE(counterexample_dims_ok(2, 2));
  EXPECT_FALSE(counterexample_dims_ok(2, 50));
  EXPECT_FALSE(counterexample_dims_ok(3, 3));
  EXPECT_TRUE(counterexample_dims_ok(3, 4));
  EXPECT_TRUE(counterexample_dims_ok(4, 3));
  EXPECT_TRUE(counterexample_dims_ok(4, 4));
}

TEST(Witness, RefutesSscOfTheKroneckerProduct) {
  Rng rng(26);
  for (auto [r1, r2] : {std::pair<Index, Index>{2, 3}, {3, 2}, {2, 2}, {3, 4}}) {
    const Mat u1 = (Mat::Constant(7, r1, 1.0 / r1) + 0.02 * random_stochastic(r1, 7, rng).transpose()) / 1.02;
    const Mat u2 = (Mat::Constant(6, r2, 1.0 / r2) + 0.02 * random_stochastic(r2, 6, rng).transpose()) / 1.02;
    const auto w = ssc1_violation_witness(u1, u2);
    ASSERT_TRUE(w.has_value());
    ASSERT_EQ(w->V.rows(), r1);
    ASSERT_EQ(w->V.cols(), r2);
    const Mat h = kron(u1, u2);
    const Vec y = Eigen::Map<const Vec>(w->V.data(), w->V.size()) / w->V.sum();
    EXPECT_GE((h * y).minCoeff(), -1e-12);
    EXPECT_GT(y.norm(), 1.0);
    if (r1 * r2 <= 8) EXPECT_EQ(check_ssc(h).ssc1, std::optional<bool>(false));
  }
}

TEST(Witness, SpreadRowsGiveNoWitness) {
  EXPECT_FALSE(ssc1_violation_witness(Mat::Identity(3, 3), Mat::Identity(4, 4)).has_value());
}
