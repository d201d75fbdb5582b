#pragma once

// Kronecker products with the first factor varying fastest on rows and on
// columns: kron(A,B)(i + m*j, a + M*b) = A(i,a) * B(j,b). Column (a,b) is
// then vec(A(:,a) B(:,b)^T) stacked column-wise, and
//   unfold(T, {2}) = kron(U_0, U_1) * G_(2) * U_2^T
// holds with the tensor layout of tensor.hpp. This is Eigen's
// kroneckerProduct(B, A) in the textbook convention.

#include <utility>
#include <vector>

#include "ntd/tensor.hpp"

namespace ntd {

template <typename DA, typename DB>
MatrixX<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  const Index m = a.rows(), M = a.cols(), n = b.rows(), N = b.cols();
  MatrixX<Scalar> out(m * n, M * N);
  for (Index q = 0; q < N; ++q)
    for (Index p = 0; p < M; ++p)
      for (Index j = 0; j < n; ++j) out.col(p + M * q).segment(m * j, m) = a.col(p) * b(j, q);
  return out;
}

// Product over a list, first factor fastest.
template <typename Scalar>
MatrixX<Scalar> kron(const std::vector<MatrixX<Scalar>>& factors) {
  if (factors.empty()) return MatrixX<Scalar>::Ones(1, 1);
  MatrixX<Scalar> out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

struct FactorShape {
  Index rows;
  Index cols;
};
using KronShape = std::vector<FactorShape>;

struct KronSplit {
  Mat u1, u2;
  double residual = 0;
};

// kron(u1, u2)(:, q) = x(:, perm[q]), i.e. kron(u1, u2) = x * Pi.
struct PermutedKronSplit {
  Mat u1, u2;
  std::vector<Index> perm;
  double residual = 0;
};

struct MultiKronSplit {
  std::vector<Mat> factors;
  std::vector<Index> perm;  // kron(factors)(:, q) = x(:, perm[q])
  double residual = 0;
};

struct NearestKron {
  Mat u1, u2;
  double residual = 0;
  bool heuristic = false;  // true when the stochastic projection ran
};

// Exact split of a Kronecker product of column-stochastic factors.
KronSplit kron_split(const Mat& x, const KronShape& shape, double feas_tol = 1e-9);

// Split when the columns of the product come in an unknown order.
PermutedKronSplit kron_split_permuted(const Mat& x, const KronShape& shape, double tol = 1e-8,
                                      double feas_tol = 1e-9);

// d-fold version; shapes in factor order (first fastest).
MultiKronSplit kron_split_multi(const Mat& x, const KronShape& shapes, double tol = 1e-8,
                                double feas_tol = 1e-9);

// Least-squares nearest u1 (x) u2 via rearrangement + rank-one SVD. With
// `stochastic`, alternating least squares under unit column sums follows.
NearestKron nearest_kron(const Mat& x, const KronShape& shape, bool stochastic = false);

// Column permutation as a matrix: (x * permutation_matrix(perm))(:, q) = x(:, perm[q]).
Mat permutation_matrix(const std::vector<Index>& perm);

}  // namespace ntd
