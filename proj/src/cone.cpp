#include "ntd/cone.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "ntd/lp.hpp"

namespace ntd {

namespace {

void require_nonnegative(const Mat& h, double tol) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (h.size() && h.minCoeff() < -tol * scale) throw PreconditionError("matrix has negative entries");
}

bool within_cap(const Mat& h, const EnumerationCap& cap) {
  return h.cols() <= cap.max_rank && h.rows() <= cap.max_rows;
}

Mat unit_rows(const Mat& h) {
  Mat a = h;
  for (Index i = 0; i < a.rows(); ++i) {
    const double nrm = a.row(i).norm();
    if (nrm > 0) a.row(i) /= nrm;
  }
  return a;
}

bool certifies_violation(const Mat& a, const Vec& y, double tol) {
  if (!y.allFinite()) return false;
  if (a.rows() && (a * y).minCoeff() < -tol * std::max(1.0, y.norm())) return false;
  if (std::abs(y.sum() - 1.0) > tol) return false;
  return y.norm() > 1.0 + tol;
}

}  // namespace

SeparableResult check_separable(const Mat& h, double tol) {
  require_nonnegative(h, tol);
  const Index r = h.cols();
  SeparableResult out;
  std::vector<Index> anchor(static_cast<std::size_t>(r), -1);
  for (Index i = 0; i < h.rows(); ++i) {
    Index k;
    const double mx = h.row(i).maxCoeff(&k);
    if (mx <= 0) continue;
    const double off = h.row(i).sum() - mx;
    if (off <= tol * mx && anchor[static_cast<std::size_t>(k)] < 0) anchor[static_cast<std::size_t>(k)] = i;
  }
  for (Index a : anchor)
    if (a < 0) return out;
  out.separable = true;
  out.anchors = anchor;
  return out;
}

SscReport check_ssc(const Mat& h, const SscOptions& opts) {
  if (h.cols() < 2) throw PreconditionError("the SSC needs r >= 2");
  require_nonnegative(h, opts.tol);
  for (Index k = 0; k < h.cols(); ++k)
    if (h.col(k).cwiseAbs().maxCoeff() == 0.0) throw PreconditionError("zero column");

  SscReport rep;
  const auto sep = check_separable(h, opts.tol);
  rep.separable = sep.separable;
  rep.anchors = sep.anchors;

  if (!within_cap(h, opts.cap)) {
    rep.method = SscMethod::refutation_search_only;
    Rng rng(opts.refute_seed);
    RefuteOptions ro;
    ro.starts = opts.refute_starts;
    ro.tol = opts.tol;
    rep.refutation = ssc1_refute(h, rng, ro);
    if (rep.refutation) rep.ssc1 = false;
    return rep;
  }

  const DualCone dual = enumerate_dual_vertices(h, opts.tol, opts.cap);
  rep.method = SscMethod::exact_enumeration;
  rep.dual_vertices = dual.vertices;
  rep.unbounded = dual.unbounded;
  for (const auto& v : dual.vertices) rep.max_vertex_norm = std::max(rep.max_vertex_norm, v.norm());
  if (dual.unbounded) {
    rep.max_vertex_norm = std::numeric_limits<double>::infinity();
    rep.ssc1 = false;
    rep.ssc2 = false;
    return rep;
  }
  rep.ssc1 = rep.max_vertex_norm <= 1.0 + opts.tol;
  bool ssc2 = true;
  for (const auto& v : dual.vertices) {
    if (v.norm() < 1.0 - opts.borderline) continue;
    bool unit = false;
    for (Index k = 0; k < v.size() && !unit; ++k) {
      Vec e = Vec::Zero(v.size());
      e(k) = 1.0;
      unit = (v - e).norm() <= opts.borderline;
    }
    if (!unit) {
      ssc2 = false;
      break;
    }
  }
  rep.ssc2 = ssc2;
  return rep;
}

std::optional<Vec> ssc1_refute(const Mat& h, Rng& rng, const RefuteOptions& opts) {
  const Index r = h.cols();
  if (r < 1) return std::nullopt;
  const Mat a = unit_rows(h);

  // A generic rhs perturbation keeps the simplex off the highly degenerate
  // vertices of {a y >= 0}; LP points are shifted back into the cone below
  // before they are checked.
  LinearProgram lp;
  lp.G = a;
  lp.h.resize(a.rows());
  for (Index i = 0; i < a.rows(); ++i) lp.h(i) = -1e-7 * (1.0 + std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  lp.E = Mat::Ones(1, r);
  lp.f = Vec::Ones(1);
  const Vec row_l1 = a.cwiseAbs().rowwise().sum();
  auto repair = [&](const Vec& x) -> Vec {
    const Vec ax = a * x;
    double c = 0.0;
    for (Index i = 0; i < a.rows(); ++i)
      if (row_l1(i) > 0 && ax(i) < 0) c = std::max(c, -ax(i) / row_l1(i));
    Vec y = x + Vec::Constant(r, c);
    return y / y.sum();
  };

  auto climb = [&](Vec g) -> std::optional<Vec> {
    double last = -1.0;
    for (int it = 0; it < opts.iters; ++it) {
      lp.c = g;
      const LpResult res = solve_lp(lp);
      if (res.status == LpStatus::infeasible) return std::nullopt;
      if (res.status == LpStatus::unbounded) {
        // Feasible point plus a long step along a recession direction.
        const double dn = res.ray.norm();
        if (dn == 0.0) return std::nullopt;
        Vec y = res.x + ((2.0 + res.x.norm()) / dn) * res.ray;
        y = repair(y / y.sum());
        if (certifies_violation(a, y, opts.tol)) return y;
        return std::nullopt;
      }
      const Vec x = repair(res.x);
      const double nrm = x.norm();
      if (certifies_violation(a, x, opts.tol)) return x;
      if (nrm <= last + 1e-12) break;
      last = nrm;
      g = x;
    }
    return std::nullopt;
  };

  for (const auto& s : opts.seeds) {
    if (s.size() != r) throw PreconditionError("refutation seed has wrong length");
    const double sum = s.sum();
    if (sum != 0.0 && certifies_violation(a, s / sum, opts.tol)) return Vec(s / sum);
    if (auto y = climb(s)) return y;
  }
  for (int k = 0; k < opts.starts; ++k)
    if (auto y = climb(gaussian_vector(r, rng))) return y;
  return std::nullopt;
}

double cp_min_inner(const Vec& v, double p) {
  const Index r = v.size();
  if (r < 1 || r > 20) throw PreconditionError("support enumeration supports 1 <= r <= 20");
  const double p2 = p * p;
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t masks = 1u << static_cast<unsigned>(r);
  std::vector<Index> idx;
  for (std::uint32_t mask = 1; mask < masks; ++mask) {
    const int s = __builtin_popcount(mask);
    if (static_cast<double>(s) < p2 - 1e-12) continue;
    idx.clear();
    for (Index k = 0; k < r; ++k)
      if (mask & (1u << static_cast<unsigned>(k))) idx.push_back(k);
    Vec vs(s);
    for (int k = 0; k < s; ++k) vs(k) = v(idx[static_cast<std::size_t>(k)]);
    const double mean = vs.mean();
    const Vec w = vs.array() - mean;
    const double nw = w.norm();
    if (nw <= 1e-15) {
      best = std::min(best, mean);
      continue;
    }
    // On this support the feasible set is a ball around e_S/s inside the
    // hyperplane; the minimizer steps against the projected objective.
    const double rho = std::sqrt(std::max(0.0, 1.0 / p2 - 1.0 / s));
    const Vec x = (1.0 / s) - (rho / nw) * w.array();
    if (x.minCoeff() < -1e-12) continue;
    best = std::min(best, mean - rho * nw);
  }
  return best;
}

bool check_pssc(const DualCone& dual, Index r, double p, double tol) {
  if (p < 1.0 - 1e-12 || p > std::sqrt(static_cast<double>(r)) * (1.0 + 1e-12))
    throw PreconditionError("p must lie in [1, sqrt(r)]");
  if (!dual.pointed) return false;
  for (const auto& ray : dual.rays) {
    const double s = ray.sum();
    const Vec v = s > 1e-10 ? Vec(ray / s) : ray;
    if (cp_min_inner(v, p) < -tol) return false;
  }
  return true;
}

bool check_pssc(const Mat& h, double p, double tol, EnumerationCap cap) {
  if (!within_cap(h, cap)) throw CapExceeded("p-SSC check beyond enumeration cap");
  return check_pssc(enumerate_dual_vertices(h, tol, cap), h.cols(), p, tol);
}

double estimate_min_p(const Mat& h, double tol, EnumerationCap cap) {
  if (!within_cap(h, cap)) throw CapExceeded("p estimation beyond enumeration cap");
  const Index r = h.cols();
  const DualCone dual = enumerate_dual_vertices(h, 1e-9, cap);
  const double inf = std::numeric_limits<double>::infinity();
  if (dual.unbounded) return inf;
  for (const auto& v : dual.vertices)
    if (v.norm() > 1.0 + 1e-9) return inf;
  if (check_pssc(dual, r, 1.0)) return 1.0;
  double lo = 1.0, hi = std::sqrt(static_cast<double>(r - 1));
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (check_pssc(dual, r, mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double kron_ssc_margin_sq(Index r1, double p1_sq, Index r2, double p2_sq) {
  auto term = [](Index r, double psq) {
    const double rd = static_cast<double>(r);
    if (r < 2) throw PreconditionError("Kronecker SSC bound needs r >= 2");
    if (psq < 1.0 - 1e-12 || psq > (rd - 1.0) * (1.0 + 1e-12))
      throw PreconditionError("expansion factor p outside [1, sqrt(r-1)]");
    return std::sqrt(std::max(0.0, (rd - psq) / (psq * (rd - 1.0))));
  };
  return term(r1, p1_sq) + term(r2, p2_sq);
}

bool kron_ssc_sufficient(Index r1, double p1, Index r2, double p2) {
  return kron_ssc_margin_sq(r1, p1 * p1, r2, p2 * p2) >= 1.0 - 1e-12;
}

bool counterexample_dims_ok(Index r1, Index r2) {
  if (r1 > r2) std::swap(r1, r2);
  return r1 * r2 - 1 < (r1 - 1) * (r1 - 1) * (r2 - 1);
}

std::optional<ViolationWitness> ssc1_violation_witness(const Mat& u1, const Mat& u2) {
  for (const Mat* u : {&u1, &u2}) {
    if (u->cols() < 2) throw PreconditionError("witness needs r >= 2");
    require_nonnegative(*u, 1e-12);
    if ((u->rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-9)
      throw PreconditionError("witness inputs must be row-stochastic");
  }
  if (u1.cols() > u2.cols()) {
    auto w = ssc1_violation_witness(u2, u1);
    if (w) {
      w->V.transposeInPlace();
      std::swap(w->c1, w->c2);
    }
    return w;
  }

  const Index r1 = u1.cols(), r2 = u2.cols();
  const double r1d = static_cast<double>(r1), r2d = static_cast<double>(r2);
  auto spread = [](const Mat& u) {
    const double r = static_cast<double>(u.cols());
    return (u.array() - 1.0 / r).matrix().rowwise().squaredNorm().maxCoeff();
  };
  ViolationWitness w;
  w.c1 = spread(u1);
  w.c2 = spread(u2);
  if (w.c1 * w.c2 >= (1.0 / (r1d * r2d)) * (r1d - 1.0) / (r1d * r2d - 1.0)) return std::nullopt;

  // Orthonormal complement of e, deterministic via Householder QR.
  auto complement = [](Index r, Index keep) {
    const Vec e = Vec::Constant(r, 1.0 / std::sqrt(static_cast<double>(r)));
    Eigen::HouseholderQR<Mat> qr(e);
    const Mat q = qr.householderQ();
    return Mat(q.block(0, 1, r, keep));
  };
  const Mat b = complement(r1, r1 - 1) * complement(r2, r1 - 1).transpose();

  w.lambda = std::sqrt(w.c1 * w.c2 * r1d * r2d);
  if (!(w.lambda * w.lambda < (r1d - 1.0) / (r1d * r2d - 1.0)))
    throw InternalInconsistency("witness lambda violates its bound");
  w.V = Mat::Constant(r1, r2, w.lambda / std::sqrt(r1d * r2d)) + b;

  const Mat img = u1 * w.V * u2.transpose();
  if (img.minCoeff() < -1e-12) throw InternalInconsistency("witness image has negative entries");
  if (!(w.V.sum() < w.V.norm())) throw InternalInconsistency("witness is inside the second-order cone");
  if (std::abs(w.V.squaredNorm() - (w.lambda * w.lambda + r1d - 1.0)) > 1e-10)
    throw InternalInconsistency("witness norm identity failed");
  return w;
}

}  // namespace ntd
