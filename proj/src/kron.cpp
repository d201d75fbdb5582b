#include "ntd/kron.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <string>

namespace ntd {

namespace {

void check_two_factor_shape(const Mat& x, const KronShape& shape) {
  if (shape.size() != 2) throw PreconditionError("two-factor split needs exactly two shapes");
  for (const auto& s : shape)
    if (s.rows < 1 || s.cols < 1) throw PreconditionError("factor shapes must be positive");
  if (x.rows() != shape[0].rows * shape[1].rows || x.cols() != shape[0].cols * shape[1].cols)
    throw PreconditionError("matrix shape does not match the Kronecker shape");
}

// Column p of x viewed as an n1 x n2 matrix (column-major, first factor on rows).
Eigen::Map<const Mat> column_as_matrix(const Mat& x, Index p, Index n1, Index n2) {
  return Eigen::Map<const Mat>(x.col(p).data(), n1, n2);
}

double kron_tolerance(const Mat& x, double feas_tol) { return feas_tol * std::max(1.0, x.norm()); }

// Greedy agglomeration: each vector joins the first group whose founder is
// within `thr`, otherwise founds a new group.
std::vector<Index> cluster(const std::vector<Vec>& vs, double thr, Index& groups) {
  std::vector<Index> label(vs.size(), -1);
  std::vector<std::size_t> founders;
  for (std::size_t p = 0; p < vs.size(); ++p) {
    for (std::size_t g = 0; g < founders.size(); ++g) {
      if ((vs[p] - vs[founders[g]]).norm() <= thr) {
        label[p] = static_cast<Index>(g);
        break;
      }
    }
    if (label[p] < 0) {
      label[p] = static_cast<Index>(founders.size());
      founders.push_back(p);
    }
  }
  groups = static_cast<Index>(founders.size());
  return label;
}

}  // namespace

Mat permutation_matrix(const std::vector<Index>& perm) {
  const auto n = static_cast<Index>(perm.size());
  Mat p = Mat::Zero(n, n);
  for (Index q = 0; q < n; ++q) p(perm[static_cast<std::size_t>(q)], q) = 1.0;
  return p;
}

KronSplit kron_split(const Mat& x, const KronShape& shape, double feas_tol) {
  check_two_factor_shape(x, shape);
  const Index n1 = shape[0].rows, r1 = shape[0].cols, n2 = shape[1].rows, r2 = shape[1].cols;
  KronSplit out{Mat::Zero(n1, r1), Mat::Zero(n2, r2), 0.0};
  for (Index p = 0; p < x.cols(); ++p) {
    if (x.col(p).cwiseAbs().maxCoeff() == 0.0)
      throw PreconditionError("zero column in Kronecker split input (degenerate)");
    const auto m = column_as_matrix(x, p, n1, n2);
    const Index a = p % r1, b = p / r1;
    out.u1.col(a) += m.rowwise().sum() / static_cast<double>(r2);
    out.u2.col(b) += m.colwise().sum().transpose() / static_cast<double>(r1);
  }
  out.residual = (x - kron(out.u1, out.u2)).norm();
  if (out.residual > kron_tolerance(x, feas_tol))
    throw NotAKroneckerProduct("Kronecker split residual " + std::to_string(out.residual) +
                               " exceeds tolerance");
  return out;
}

PermutedKronSplit kron_split_permuted(const Mat& x, const KronShape& shape, double tol, double feas_tol) {
  check_two_factor_shape(x, shape);
  const Index n1 = shape[0].rows, r1 = shape[0].cols, n2 = shape[1].rows, r2 = shape[1].cols;
  const auto cols = static_cast<std::size_t>(x.cols());
  std::vector<Vec> left(cols), right(cols);
  double lmax = 0, rmax = 0;
  for (std::size_t p = 0; p < cols; ++p) {
    const auto m = column_as_matrix(x, static_cast<Index>(p), n1, n2);
    left[p] = m.rowwise().sum();
    right[p] = m.colwise().sum().transpose();
    lmax = std::max(lmax, left[p].norm());
    rmax = std::max(rmax, right[p].norm());
  }
  if (lmax == 0.0) throw PreconditionError("zero matrix in Kronecker split input (degenerate)");

  Index gl = 0, gr = 0;
  const auto lab_l = cluster(left, tol * lmax, gl);
  const auto lab_r = cluster(right, tol * rmax, gr);
  if (gl != r1 || gr != r2)
    throw NotPermutedKronecker("found " + std::to_string(gl) + " left / " + std::to_string(gr) +
                               " right groups, expected " + std::to_string(r1) + " / " + std::to_string(r2));

  PermutedKronSplit out{Mat::Zero(n1, r1), Mat::Zero(n2, r2), std::vector<Index>(cols, -1), 0.0};
  std::vector<Index> lcount(static_cast<std::size_t>(r1), 0), rcount(static_cast<std::size_t>(r2), 0);
  for (std::size_t p = 0; p < cols; ++p) {
    const Index a = lab_l[p], b = lab_r[p];
    auto& slot = out.perm[static_cast<std::size_t>(a + r1 * b)];
    if (slot >= 0) throw NotPermutedKronecker("two columns map to the same Kronecker position");
    slot = static_cast<Index>(p);
    out.u1.col(a) += left[p];
    out.u2.col(b) += right[p];
    ++lcount[static_cast<std::size_t>(a)];
    ++rcount[static_cast<std::size_t>(b)];
  }
  for (Index a = 0; a < r1; ++a) {
    if (lcount[static_cast<std::size_t>(a)] != r2)
      throw NotPermutedKronecker("left factor group does not have exactly r2 members");
    out.u1.col(a) /= static_cast<double>(r2);
  }
  for (Index b = 0; b < r2; ++b) {
    if (rcount[static_cast<std::size_t>(b)] != r1)
      throw NotPermutedKronecker("right factor group does not have exactly r1 members");
    out.u2.col(b) /= static_cast<double>(r1);
  }
  out.residual = (x * permutation_matrix(out.perm) - kron(out.u1, out.u2)).norm();
  if (out.residual > kron_tolerance(x, feas_tol))
    throw NotPermutedKronecker("permuted Kronecker residual " + std::to_string(out.residual) +
                               " exceeds tolerance");
  return out;
}

MultiKronSplit kron_split_multi(const Mat& x, const KronShape& shapes, double tol, double feas_tol) {
  if (shapes.empty()) throw PreconditionError("need at least one factor shape");
  Index rows = 1, cols = 1;
  for (const auto& s : shapes) {
    if (s.rows < 1 || s.cols < 1) throw PreconditionError("factor shapes must be positive");
    rows *= s.rows;
    cols *= s.cols;
  }
  if (x.rows() != rows || x.cols() != cols)
    throw PreconditionError("matrix shape does not match the product of factor shapes");

  MultiKronSplit out;
  if (shapes.size() == 1) {
    out.factors = {x};
    out.perm.resize(static_cast<std::size_t>(cols));
    std::iota(out.perm.begin(), out.perm.end(), Index{0});
    return out;
  }

  const KronShape head(shapes.begin(), shapes.end() - 1);
  const FactorShape last = shapes.back();
  FactorShape lead{1, 1};
  for (const auto& s : head) {
    lead.rows *= s.rows;
    lead.cols *= s.cols;
  }
  const auto outer = kron_split_permuted(x, {lead, last}, tol, feas_tol);
  const auto inner = kron_split_multi(outer.u1, head, tol, feas_tol);

  out.factors = inner.factors;
  out.factors.push_back(outer.u2);
  out.perm.resize(static_cast<std::size_t>(cols));
  for (Index b = 0; b < last.cols; ++b)
    for (Index q = 0; q < lead.cols; ++q)
      out.perm[static_cast<std::size_t>(q + lead.cols * b)] =
          outer.perm[static_cast<std::size_t>(inner.perm[static_cast<std::size_t>(q)] + lead.cols * b)];
  out.residual = (x * permutation_matrix(out.perm) - kron(out.factors)).norm();
  if (out.residual > kron_tolerance(x, feas_tol))
    throw NotPermutedKronecker("multi-factor Kronecker residual exceeds tolerance");
  return out;
}

NearestKron nearest_kron(const Mat& x, const KronShape& shape, bool stochastic) {
  check_two_factor_shape(x, shape);
  const Index n1 = shape[0].rows, r1 = shape[0].cols, n2 = shape[1].rows, r2 = shape[1].cols;

  // R(i + n1 a, j + n2 b) = x(i + n1 j, a + r1 b) turns u1 (x) u2 into vec(u1) vec(u2)^T.
  Mat rearranged(n1 * r1, n2 * r2);
  for (Index b = 0; b < r2; ++b)
    for (Index a = 0; a < r1; ++a)
      for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i < n1; ++i) rearranged(i + n1 * a, j + n2 * b) = x(i + n1 * j, a + r1 * b);

  NearestKron out{Mat::Zero(n1, r1), Mat::Zero(n2, r2), 0.0, stochastic};
  Eigen::JacobiSVD<Mat> svd(rearranged, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s0 = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  if (s0 > 0.0) {
    Vec v1 = std::sqrt(s0) * svd.matrixU().col(0);
    Vec v2 = std::sqrt(s0) * svd.matrixV().col(0);
    if (v1.sum() < 0) {
      v1 = -v1;
      v2 = -v2;
    }
    out.u1 = Eigen::Map<Mat>(v1.data(), n1, r1);
    out.u2 = Eigen::Map<Mat>(v2.data(), n2, r2);
  }

  if (stochastic && s0 > 0.0) {
    // Blockwise exact minimizers under unit column sums; each block's
    // objective is isotropic, so the constrained optimum is the
    // unconstrained one shifted along e.
    auto block = [&](Index a, Index b) { return column_as_matrix(x, a + r1 * b, n1, n2); };
    for (int round = 0; round < 50; ++round) {
      const Mat prev1 = out.u1, prev2 = out.u2;
      const double d2 = out.u2.squaredNorm();
      if (d2 > 0) {
        for (Index a = 0; a < r1; ++a) {
          Vec u = Vec::Zero(n1);
          for (Index b = 0; b < r2; ++b) u += block(a, b) * out.u2.col(b);
          u /= d2;
          u.array() += (1.0 - u.sum()) / static_cast<double>(n1);
          out.u1.col(a) = u;
        }
      }
      const double d1 = out.u1.squaredNorm();
      if (d1 > 0) {
        for (Index b = 0; b < r2; ++b) {
          Vec v = Vec::Zero(n2);
          for (Index a = 0; a < r1; ++a) v += block(a, b).transpose() * out.u1.col(a);
          v /= d1;
          v.array() += (1.0 - v.sum()) / static_cast<double>(n2);
          out.u2.col(b) = v;
        }
      }
      const double change = (out.u1 - prev1).norm() + (out.u2 - prev2).norm();
      if (change <= 1e-14 * (1.0 + out.u1.norm() + out.u2.norm())) break;
    }
  }
  out.residual = (x - kron(out.u1, out.u2)).norm();
  return out;
}

}  // namespace ntd
