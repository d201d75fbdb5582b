#pragma once

#include <cstdint>
#include <vector>

#include "ntd/linalg.hpp"
#include "ntd/model.hpp"

namespace ntd {

struct SolverConfig {
  int max_sweeps = 200;
  double det_rel_tol = 1e-10;
  double feas_tol = 1e-9;
  int restarts = 5;
  std::uint64_t seed = 0;
};

// x = u1 * g * u2^T with column-stochastic nonnegative u1, u2.
struct Order2Ntd {
  Mat u1;
  Mat g;
  Mat u2;
  double abs_det = 0;  // |det g|
};

struct MaxDetResult {
  Mat q;
  double abs_det = 0;
  int sweeps = 0;      // of the winning restart
  int restart = 0;     // index of the winning restart
};

// Maximizes |det q| over {q : b q >= 0, e^T b q = e^T}, one column at a
// time: with the other columns fixed det q is linear in column j, so each
// update is a pair of LPs.
MaxDetResult maxdet_simplex(const Mat& b, const SolverConfig& cfg = {});

// Min |det g| subject to x = u1 g u2^T, u_i >= 0, u_i^T e = e.
Order2Ntd minvol_order2_ntd(const Mat& x, Index r, const SolverConfig& cfg = {});

struct NmfResult {
  Mat w;
  Mat h;
  double volume = 0;  // det(w^T w)
};

// Min det(w^T w) subject to x = w h^T, h >= 0, h^T e = e; w is unconstrained.
NmfResult minvol_nmf(const Mat& x, Index r, const SolverConfig& cfg = {});

struct SeparableNmf {
  std::vector<Index> anchors;  // columns of x picked as extreme rays
  Mat w;
  Mat h;  // h >= 0, h^T e = e
};

// Successive projection on the conic hull of the columns of x, then
// nonnegative least squares for h.
SeparableNmf spa_separable_nmf(const Mat& x, Index r, double feas_tol = 1e-9);

// Anchors of u2 from the columns of x, of u1 from the columns of x^T.
Order2Ntd separable_order2_ntd(const Mat& x, Index r, double feas_tol = 1e-9);

// Lawson-Hanson nonnegative least squares: argmin_{z >= 0} ||a z - b||.
Vec nnls(const Mat& a, const Vec& b);

struct PenalizedResult {
  NtdModel model;        // factors from the Kronecker block
  Order2Ntd unfolding;   // the exact-fit triple of the unfolding
  double penalty = 0;    // ||U_12 - U_1 (x) U_2||_F^2
  double abs_det = 0;    // |det G_(3)|
  double objective = 0;  // abs_det + lambda * penalty
  double residual = 0;   // relative reconstruction error of `model`
};

// Block-coordinate descent on |det G_(3)| + lambda ||U_12 - U_1 (x) U_2||^2
// for an order-3 tensor with r3 = r1 r2. The exact fit of the mode-3
// unfolding is kept structurally (range parametrization); the Kronecker
// block is refit with nearest_kron under unit column sums.
PenalizedResult allatonce_penalized(const DenseTensor& t, const std::vector<Index>& ranks, double lambda,
                                    const SolverConfig& cfg = {});

}  // namespace ntd
