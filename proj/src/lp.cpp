#include "ntd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ntd {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr int kDegenerateStreak = 30;
constexpr int kMaxPivots = 100000;

struct Tableau {
  Mat t;                      // constraint rows, last column = rhs
  Eigen::RowVectorXd obj;     // -reduced costs, last entry = objective value
  std::vector<Index> basis;   // basic column per row
  std::vector<char> allowed;  // columns that may enter
  int pivots = 0;

  Index cols() const { return t.cols() - 1; }

  void pivot(Index row, Index col) {
    const double p = t(row, col);
    const Eigen::RowVectorXd prow = t.row(row) / p;
    const Vec c = t.col(col);
    t.noalias() -= c * prow;
    t.row(row) = prow;
    obj -= obj(col) * prow;
    basis[static_cast<std::size_t>(row)] = col;
    ++pivots;
  }

  // Price out basic columns so obj holds reduced costs for cost vector `cost`.
  void set_objective(const Eigen::RowVectorXd& cost) {
    obj = Eigen::RowVectorXd::Zero(t.cols());
    obj.head(cols()) = -cost;
    for (Index i = 0; i < t.rows(); ++i) {
      const Index b = basis[static_cast<std::size_t>(i)];
      if (obj(b) != 0.0) obj -= obj(b) * t.row(i);
    }
  }

  enum class Outcome { optimal, unbounded };

  // Maximizes; on unbounded returns the entering column through `ray_col`.
  Outcome run(double tol, Index& ray_col) {
    int degenerate = 0;
    bool bland = false;
    const Index rhs = cols();
    for (;;) {
      if (pivots > kMaxPivots) throw SolverError("simplex pivot limit exceeded");
      // Sticky: dropping back to Dantzig after one nondegenerate step can
      // still cycle under floating-point ties.
      bland = bland || degenerate >= kDegenerateStreak;
      Index enter = -1;
      double best = -tol;
      for (Index j = 0; j < cols(); ++j) {
        if (!allowed[static_cast<std::size_t>(j)]) continue;
        if (obj(j) < best) {
          enter = j;
          if (bland) break;
          best = obj(j);
        }
      }
      if (enter < 0) return Outcome::optimal;

      Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < t.rows(); ++i) {
        const double a = t(i, enter);
        if (a <= kPivotTol) continue;
        const double q = t(i, rhs) / a;
        if (leave < 0 || q < ratio - 1e-14) {
          ratio = q;
          leave = i;
        } else if (q <= ratio + 1e-14 &&
                   basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) {
          ratio = std::min(ratio, q);
          leave = i;
        }
      }
      if (leave < 0) {
        ray_col = enter;
        return Outcome::unbounded;
      }
      degenerate = ratio <= 1e-13 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
  const Index k = lp.c.size();
  const Index m = lp.G.rows();
  const Index p = lp.E.rows();
  if ((m > 0 && (lp.G.cols() != k || lp.h.size() != m)) || (p > 0 && (lp.E.cols() != k || lp.f.size() != p)))
    throw PreconditionError("linear program blocks have inconsistent shapes");

  // Columns: x+ (k), x- (k), slack (m), artificial (one per row needing it).
  std::vector<Index> art_row;
  for (Index i = 0; i < m; ++i)
    if (lp.h(i) > 0) art_row.push_back(i);
  for (Index i = 0; i < p; ++i) art_row.push_back(m + i);
  const Index na = static_cast<Index>(art_row.size());
  const Index ncols = 2 * k + m + na;
  const Index rows = m + p;

  Tableau tb;
  tb.t = Mat::Zero(rows, ncols + 1);
  tb.basis.assign(static_cast<std::size_t>(rows), -1);
  tb.allowed.assign(static_cast<std::size_t>(ncols), 1);

  for (Index i = 0; i < m; ++i) {
    // G x - s = h; flipped to -G x + s = -h when h <= 0 so s starts basic.
    const double sign = lp.h(i) > 0 ? 1.0 : -1.0;
    tb.t.block(i, 0, 1, k) = sign * lp.G.row(i);
    tb.t.block(i, k, 1, k) = -sign * lp.G.row(i);
    tb.t(i, 2 * k + i) = -sign;
    tb.t(i, ncols) = sign * lp.h(i);
    if (sign < 0) tb.basis[static_cast<std::size_t>(i)] = 2 * k + i;
  }
  for (Index i = 0; i < p; ++i) {
    const double sign = lp.f(i) >= 0 ? 1.0 : -1.0;
    tb.t.block(m + i, 0, 1, k) = sign * lp.E.row(i);
    tb.t.block(m + i, k, 1, k) = -sign * lp.E.row(i);
    tb.t(m + i, ncols) = sign * lp.f(i);
  }
  for (Index a = 0; a < na; ++a) {
    const Index row = art_row[static_cast<std::size_t>(a)];
    tb.t(row, 2 * k + m + a) = 1.0;
    tb.basis[static_cast<std::size_t>(row)] = 2 * k + m + a;
  }

  LpResult res;
  const double scale = 1.0 + (rows > 0 ? tb.t.col(ncols).cwiseAbs().maxCoeff() : 0.0);
  Index ray_col = -1;

  if (na > 0) {
    Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(ncols);
    cost.tail(na).setConstant(-1.0);
    tb.set_objective(cost);
    tb.run(tol, ray_col);  // bounded above by 0
    if (tb.obj(ncols) < -tol * scale * 1e2) {
      res.status = LpStatus::infeasible;
      res.pivots = tb.pivots;
      return res;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (Index i = 0; i < rows; ++i) {
      if (tb.basis[static_cast<std::size_t>(i)] < 2 * k + m) continue;
      Index best = -1;
      double mag = kPivotTol;
      for (Index j = 0; j < 2 * k + m; ++j)
        if (std::abs(tb.t(i, j)) > mag) {
          mag = std::abs(tb.t(i, j));
          best = j;
        }
      if (best >= 0) tb.pivot(i, best);
    }
    for (Index a = 0; a < na; ++a) tb.allowed[static_cast<std::size_t>(2 * k + m + a)] = 0;
  }

  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(ncols);
  cost.head(k) = lp.c.transpose();
  cost.segment(k, k) = -lp.c.transpose();
  tb.set_objective(cost);
  const auto outcome = tb.run(tol, ray_col);

  Vec z = Vec::Zero(ncols);
  for (Index i = 0; i < rows; ++i) z(tb.basis[static_cast<std::size_t>(i)]) = tb.t(i, ncols);
  res.x = z.head(k) - z.segment(k, k);
  res.value = lp.c.dot(res.x);
  res.pivots = tb.pivots;
  if (outcome == Tableau::Outcome::unbounded) {
    Vec d = Vec::Zero(ncols);
    d(ray_col) = 1.0;
    for (Index i = 0; i < rows; ++i) d(tb.basis[static_cast<std::size_t>(i)]) -= tb.t(i, ray_col);
    res.ray = d.head(k) - d.segment(k, k);
    res.status = LpStatus::unbounded;
  } else {
    res.status = LpStatus::optimal;
  }
  return res;
}

}  // namespace ntd
