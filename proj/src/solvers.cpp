#include "ntd/solvers.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "ntd/kron.hpp"
#include "ntd/lp.hpp"

namespace ntd {

namespace {

// det(q) = cofactor_column(q, j) . q(:, j)
Vec cofactor_column(const Mat& q, Index j) {
  const Index r = q.rows();
  Vec c(r);
  if (r == 1) {
    c(0) = 1.0;
    return c;
  }
  Mat minor(r - 1, r - 1);
  for (Index i = 0; i < r; ++i) {
    for (Index cc = 0, mc = 0; cc < r; ++cc) {
      if (cc == j) continue;
      for (Index rr = 0, mr = 0; rr < r; ++rr) {
        if (rr == i) continue;
        minor(mr++, mc) = q(rr, cc);
      }
      ++mc;
    }
    const double d = Eigen::FullPivLU<Mat>(minor).determinant();
    c(i) = ((i + j) % 2 == 0) ? d : -d;
  }
  return c;
}

double abs_det(const Mat& q) { return std::abs(Eigen::FullPivLU<Mat>(q).determinant()); }

// {q : b q >= 0, e^T b q = 1}
LinearProgram cross_section_lp(const Mat& b) {
  LinearProgram lp;
  lp.G = b;
  lp.h = Vec::Zero(b.rows());
  lp.E = b.colwise().sum();
  lp.f = Vec::Ones(1);
  return lp;
}

Vec solve_column(LinearProgram& lp, const Vec& c) {
  lp.c = c;
  const LpResult res = solve_lp(lp);
  if (res.status == LpStatus::infeasible) throw InfeasibleProblem("empty cross-section in column update");
  if (res.status == LpStatus::unbounded) throw SolverError("degenerate (unbounded) cross-section");
  return res.x;
}

// Successive projection on the rows of b, normalized onto a hyperplane
// cutting every row's ray; the picked rows are the most extreme
// generators of cone(b^T) and their inverse is a near-vertex start.
std::optional<Mat> spa_start(const Mat& b) {
  const Index r = b.cols();
  const double mx = b.rowwise().norm().maxCoeff();
  std::vector<Index> rows;
  for (Index i = 0; i < b.rows(); ++i)
    if (b.row(i).norm() > 1e-12 * mx) rows.push_back(i);
  if (static_cast<Index>(rows.size()) < r) return std::nullopt;

  LinearProgram lp;
  lp.c = Vec::Zero(r);
  lp.G.resize(static_cast<Index>(rows.size()), r);
  for (std::size_t k = 0; k < rows.size(); ++k)
    lp.G.row(static_cast<Index>(k)) = b.row(rows[k]) / b.row(rows[k]).norm();
  lp.h = Vec::Ones(static_cast<Index>(rows.size()));
  const LpResult dir = solve_lp(lp);
  if (dir.status != LpStatus::optimal) return std::nullopt;

  Mat p(r, static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    p.col(static_cast<Index>(k)) = b.row(rows[k]).transpose() / b.row(rows[k]).dot(dir.x);
  Mat bk(r, r);
  for (Index k = 0; k < r; ++k) {
    Index best = 0;
    const double top = p.colwise().norm().maxCoeff(&best);
    if (top <= 1e-12) return std::nullopt;
    bk.row(k) = b.row(rows[static_cast<std::size_t>(best)]);
    const Vec u = p.col(best) / top;
    p -= u * (u.transpose() * p);
  }
  Eigen::FullPivLU<Mat> lu(bk);
  if (!lu.isInvertible()) return std::nullopt;
  Mat q = lu.inverse();
  const Eigen::RowVectorXd sums = b.colwise().sum() * q;
  for (Index j = 0; j < r; ++j) {
    if (std::abs(sums(j)) < 1e-12) return std::nullopt;
    q.col(j) /= sums(j);
  }
  return q;
}

Mat random_vertex_start(LinearProgram& lp, Index r, Rng& rng) {
  Mat q(r, r);
  for (Index j = 0; j < r; ++j) q.col(j) = solve_column(lp, gaussian_vector(r, rng));
  return q;
}

// Column-wise ascent from `q`. The first sweep always replaces every
// column so infeasible starts become feasible.
MaxDetResult ascend(LinearProgram& lp, Mat q, const SolverConfig& cfg) {
  const Index r = q.cols();
  double cur = abs_det(q);
  MaxDetResult out;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const double before = cur;
    for (Index j = 0; j < r; ++j) {
      const Vec cof = cofactor_column(q, j);
      const Vec hi = solve_column(lp, cof);
      const Vec lo = solve_column(lp, -cof);
      const double vhi = std::abs(cof.dot(hi)), vlo = std::abs(cof.dot(lo));
      const Vec& pick = vhi >= vlo ? hi : lo;
      const double val = std::max(vhi, vlo);
      if (sweep == 0 || val > cur * (1.0 + 1e-14)) {
        q.col(j) = pick;
        cur = abs_det(q);
      }
    }
    out.sweeps = sweep + 1;
    if (sweep > 0 && cur - before <= cfg.det_rel_tol * cur) break;
  }
  out.q = q;
  out.abs_det = cur;
  return out;
}

// Zero out rounding-level negatives and restore unit column sums.
Mat clean_stochastic(Mat u, double feas_tol) {
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  if (u.minCoeff() < -feas_tol * scale * 1e3)
    throw SolverError("factor violates nonnegativity beyond tolerance");
  u = u.cwiseMax(0.0);
  for (Index c = 0; c < u.cols(); ++c) {
    const double s = u.col(c).sum();
    if (s <= 0) throw SolverError("factor has a zero column");
    u.col(c) /= s;
  }
  return u;
}

void require_rank(const Mat& x, Index r) {
  if (r < 1) throw PreconditionError("rank must be positive");
  const Index rank = numerical_rank(x);
  if (rank != r)
    throw RankDeficient("numerical rank " + std::to_string(rank) + " differs from target " + std::to_string(r));
}

void require_fit(const Mat& x, const Mat& approx, double feas_tol, const char* what) {
  const double err = (x - approx).norm();
  if (err > feas_tol * std::max(1.0, x.norm()))
    throw SolverError(std::string(what) + ": reconstruction residual " + std::to_string(err));
}

}  // namespace

MaxDetResult maxdet_simplex(const Mat& b, const SolverConfig& cfg) {
  const Index r = b.cols();
  if (r < 1 || b.rows() < r) throw PreconditionError("basis must have at least as many rows as columns");
  LinearProgram lp = cross_section_lp(b);
  Rng rng = substream(cfg.seed, 0x6d617864);

  MaxDetResult best;
  best.abs_det = -1.0;
  const int restarts = std::max(1, cfg.restarts);
  for (int k = 0; k < restarts; ++k) {
    std::optional<Mat> start;
    if (k == 0) start = spa_start(b);
    if (!start) start = random_vertex_start(lp, r, rng);
    MaxDetResult res = ascend(lp, *start, cfg);
    res.restart = k;
    if (res.abs_det > best.abs_det * (1.0 + 1e-12)) best = res;
  }

  const Mat y = b * best.q;
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (y.minCoeff() < -cfg.feas_tol * scale ||
      (y.colwise().sum().array() - 1.0).abs().maxCoeff() > cfg.feas_tol * scale)
    throw InfeasibleProblem("max-det solution violates the cross-section constraints");
  return best;
}

Order2Ntd minvol_order2_ntd(const Mat& x, Index r, const SolverConfig& cfg) {
  require_rank(x, r);
  const Mat w = orthonormal_range(x, r);
  const Mat z = orthonormal_range(x.transpose(), r);
  SolverConfig c1 = cfg, c2 = cfg;
  c1.seed = derive_seed(cfg.seed, 1);
  c2.seed = derive_seed(cfg.seed, 2);
  const MaxDetResult m1 = maxdet_simplex(w, c1);
  const MaxDetResult m2 = maxdet_simplex(z, c2);

  Order2Ntd out;
  out.u1 = clean_stochastic(w * m1.q, cfg.feas_tol);
  out.u2 = clean_stochastic(z * m2.q, cfg.feas_tol);
  out.g = pinv(out.u1) * x * pinv(out.u2).transpose();
  out.abs_det = abs_det(out.g);
  require_fit(x, out.u1 * out.g * out.u2.transpose(), cfg.feas_tol, "min-vol order-2 nTD");
  return out;
}

NmfResult minvol_nmf(const Mat& x, Index r, const SolverConfig& cfg) {
  require_rank(x, r);
  const Mat z = orthonormal_range(x.transpose(), r);
  SolverConfig c = cfg;
  c.seed = derive_seed(cfg.seed, 3);
  const MaxDetResult m = maxdet_simplex(z, c);

  NmfResult out;
  out.h = clean_stochastic(z * m.q, cfg.feas_tol);
  out.w = x * pinv(out.h.transpose());
  out.volume = (out.w.transpose() * out.w).determinant();
  require_fit(x, out.w * out.h.transpose(), cfg.feas_tol, "min-vol NMF");
  return out;
}

Vec nnls(const Mat& a, const Vec& b) {
  const Index n = a.cols();
  Vec x = Vec::Zero(n);
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  const double tol = 1e-12 * std::max(1.0, a.norm()) * std::max(1.0, b.norm());

  // Fast path: the unconstrained solution is already feasible.
  const Vec ls = a.colPivHouseholderQr().solve(b);
  if (ls.allFinite() && ls.minCoeff() >= 0.0) return ls;

  auto solve_passive = [&]() {
    std::vector<Index> idx;
    for (Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Mat ap(a.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(idx[k]);
    const Vec zp = ap.colPivHouseholderQr().solve(b);
    Vec z = Vec::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Index>(k));
    return z;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
    const Vec grad = a.transpose() * (b - a * x);
    Index enter = -1;
    double best = tol;
    for (Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && grad(j) > best) {
        best = grad(j);
        enter = j;
      }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = 1;
    for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner) {
      const Vec z = solve_passive();
      bool feasible = true;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0)
          alpha = std::min(alpha, x(j) / (x(j) - z(j)));
      x += alpha * (z - x);
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = 0;
          x(j) = 0;
        }
    }
  }
  return x;
}

SeparableNmf spa_separable_nmf(const Mat& x, Index r, double feas_tol) {
  if (r < 1 || r > std::min(x.rows(), x.cols())) throw PreconditionError("invalid separable rank");
  if (numerical_rank(x) < r) throw RankDeficient("rank below separable target");
  const Mat basis = orthonormal_range(x, r);
  const Mat y = basis.transpose() * x;

  const Vec norms = y.colwise().norm().transpose();
  const double mx = norms.maxCoeff();
  std::vector<Index> cols;
  for (Index j = 0; j < y.cols(); ++j)
    if (norms(j) > 1e-12 * mx) cols.push_back(j);

  // Direction a with a^T y_j > 0 for every column puts all rays on one hyperplane.
  LinearProgram lp;
  lp.c = Vec::Zero(r);
  lp.G.resize(static_cast<Index>(cols.size()), r);
  for (std::size_t k = 0; k < cols.size(); ++k)
    lp.G.row(static_cast<Index>(k)) = y.col(cols[k]).transpose() / norms(cols[k]);
  lp.h = Vec::Ones(static_cast<Index>(cols.size()));
  const LpResult dir = solve_lp(lp);
  if (dir.status != LpStatus::optimal) throw NotSeparable("columns do not generate a pointed cone");

  Mat p(r, static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    p.col(static_cast<Index>(k)) = y.col(cols[k]) / y.col(cols[k]).dot(dir.x);

  SeparableNmf out;
  for (Index k = 0; k < r; ++k) {
    Index best = 0;
    const double top = p.colwise().norm().maxCoeff(&best);
    if (top <= 1e-12) throw NotSeparable("successive projection ran out of directions");
    out.anchors.push_back(cols[static_cast<std::size_t>(best)]);
    const Vec u = p.col(best) / top;
    p -= u * (u.transpose() * p);
  }

  out.w.resize(x.rows(), r);
  for (Index k = 0; k < r; ++k) out.w.col(k) = x.col(out.anchors[static_cast<std::size_t>(k)]);
  out.h.resize(x.cols(), r);
  for (Index j = 0; j < x.cols(); ++j) out.h.row(j) = nnls(out.w, x.col(j)).transpose();
  for (Index k = 0; k < r; ++k) {
    const double s = out.h.col(k).sum();
    if (s <= 0) throw NotSeparable("anchor column unused by the fit");
    out.h.col(k) /= s;
    out.w.col(k) *= s;
  }
  const double err = (x - out.w * out.h.transpose()).norm();
  if (err > feas_tol * std::max(1.0, x.norm()))
    throw NotSeparable("separable fit residual " + std::to_string(err) + " exceeds tolerance");
  return out;
}

Order2Ntd separable_order2_ntd(const Mat& x, Index r, double feas_tol) {
  const SeparableNmf right = spa_separable_nmf(x, r, feas_tol);
  const SeparableNmf left = spa_separable_nmf(x.transpose(), r, feas_tol);
  Order2Ntd out;
  out.u1 = left.h;
  out.u2 = right.h;
  out.g = pinv(out.u1) * x * pinv(out.u2).transpose();
  out.abs_det = abs_det(out.g);
  require_fit(x, out.u1 * out.g * out.u2.transpose(), feas_tol, "separable order-2 nTD");
  return out;
}

PenalizedResult allatonce_penalized(const DenseTensor& t, const std::vector<Index>& ranks, double lambda,
                                    const SolverConfig& cfg) {
  if (t.order() != 3 || ranks.size() != 3) throw PreconditionError("penalized variant is implemented for order 3");
  const Index r1 = ranks[0], r2 = ranks[1], r3 = ranks[2];
  if (r3 != r1 * r2) throw PreconditionError("penalized variant needs r3 = r1 r2");
  if (lambda < 0) throw PreconditionError("penalty weight must be nonnegative");

  const Mat x = unfold(t, ModeSet{2});
  require_rank(x, r3);
  const Mat w = orthonormal_range(x, r3);
  const Mat z = orthonormal_range(x.transpose(), r3);
  SolverConfig c1 = cfg, c2 = cfg;
  c1.seed = derive_seed(cfg.seed, 1);
  c2.seed = derive_seed(cfg.seed, 2);
  Mat q1 = maxdet_simplex(w, c1).q;
  const Mat q2 = maxdet_simplex(z, c2).q;

  const double core_det = abs_det(w.transpose() * x * z);
  const double det_q2 = abs_det(q2);
  const KronShape shape{{t.dim(0), r1}, {t.dim(1), r2}};
  LinearProgram lp = cross_section_lp(w);

  auto objective = [&](const Mat& q, const Mat& k) {
    const double d = abs_det(q);
    if (d == 0.0) return std::numeric_limits<double>::infinity();
    return core_det / (d * det_q2) + lambda * (w * q - k).squaredNorm();
  };

  double prev = std::numeric_limits<double>::infinity();
  Mat k;
  const int outer_limit = std::min(cfg.max_sweeps, 100);
  for (int outer = 0; outer < outer_limit; ++outer) {
    // Columns of U_12 may be relabeled freely; align them to Kronecker order when possible.
    try {
      const auto ps = kron_split_permuted(w * q1, shape, 1e-8, 1e-6);
      q1 = q1 * permutation_matrix(ps.perm);
    } catch (const Error&) {
    }
    const NearestKron nk = nearest_kron(w * q1, shape, true);
    k = kron(nk.u1, nk.u2);
    double cur = objective(q1, k);
    for (Index j = 0; j < r3; ++j) {
      const Vec cof = cofactor_column(q1, j);
      std::vector<Vec> cands{solve_column(lp, cof), solve_column(lp, -cof)};
      const Vec proj = w.transpose() * k.col(j);
      const Vec img = w * proj;
      if (img.minCoeff() >= -cfg.feas_tol && std::abs(img.sum() - 1.0) <= cfg.feas_tol) cands.push_back(proj);
      for (const auto& cand : cands) {
        Mat trial = q1;
        trial.col(j) = cand;
        const double f = objective(trial, k);
        if (f < cur * (1.0 - 1e-14)) {
          q1 = trial;
          cur = f;
        }
      }
    }
    if (prev - cur <= cfg.det_rel_tol * std::max(cur, 1e-300)) {
      prev = cur;
      break;
    }
    prev = cur;
  }

  PenalizedResult out;
  out.unfolding.u1 = clean_stochastic(w * q1, cfg.feas_tol);
  out.unfolding.u2 = clean_stochastic(z * q2, cfg.feas_tol);
  out.unfolding.g = pinv(out.unfolding.u1) * x * pinv(out.unfolding.u2).transpose();
  out.unfolding.abs_det = abs_det(out.unfolding.g);

  Mat u1, u2;
  try {
    const KronSplit ks = kron_split(out.unfolding.u1, shape, cfg.feas_tol);
    u1 = ks.u1;
    u2 = ks.u2;
  } catch (const Error&) {
    const NearestKron nk = nearest_kron(out.unfolding.u1, shape, true);
    u1 = nk.u1;
    u2 = nk.u2;
  }
  const Mat k12 = kron(u1, u2);
  out.penalty = (out.unfolding.u1 - k12).squaredNorm();
  out.abs_det = out.unfolding.abs_det;
  out.objective = out.abs_det + lambda * out.penalty;
  const Mat g3 = pinv(k12) * x * pinv(out.unfolding.u2).transpose();
  out.model.factors = {u1, u2, out.unfolding.u2};
  out.model.core = fold(g3, ModeSet{2}, {r1, r2, r3});
  out.model.diagnostics["penalty"] = {out.penalty};
  out.model.diagnostics["abs_det"] = {out.abs_det};
  out.residual = relative_residual(out.model, t);
  out.model.diagnostics["residual"] = {out.residual};
  return out;
}

}  // namespace ntd
