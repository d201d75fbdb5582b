#pragma once

// Identification pipelines. Every procedure returns a model with
// column-stochastic factors whose reconstruction matches the input within
// cfg.feas_tol (relative), or throws.
//
// Modes and slice indices are 0-based. Diagnostics written by every
// procedure:
//   "procedure"  numeric id (0..4, 10 = d0, 11 = d1, 13 = d3, 20 = sep-d)
//   "objective"  per solver step: |det g| for an order-2 step, det(w^T w)
//                for a min-vol NMF step
//   "residual"   relative reconstruction error
// plus the slice indices, weights or mixing matrix that were used.

#include <optional>
#include <vector>

#include "ntd/model.hpp"
#include "ntd/solvers.hpp"

namespace ntd {

struct ModePartition {
  ModeSet I, J, K;
};

// First slice along `mode` attaining the largest numerical rank.
// For order > 3 a slice is read with rows over the lowest remaining mode
// and columns over the others.
Index select_max_rank_slice(const DenseTensor& t, int mode, double rank_factor = 1e3);

// Min-vol nTD of the mode-3 unfolding, then Kronecker splitting of the
// left factor. Needs r3 = r1 r2.
NtdModel procedure0(const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg = {});

// Min-vol order-2 nTD of mode-3 slice i3 gives U1, U2; min-vol NMF of the
// projected mode-2 slice i2 gives U3. Missing indices are auto-selected.
NtdModel procedure1(const DenseTensor& t, const Dims& ranks, std::optional<Index> i2 = {},
                    std::optional<Index> i3 = {}, const SolverConfig& cfg = {});

// Gaussian combinations of slices. Weights come from cfg.seed unless given.
struct SliceWeights {
  Vec alpha;  // over mode-3 slices
  Vec beta;   // over mode-2 slices
};
NtdModel procedure2(const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg = {},
                    const std::optional<SliceWeights>& weights = {});

// Step one as procedure1 on slice i_star; then min-vol NMF of the stacked
// projected slices recovers the mode-3 unfolding of the core and U3.
// Allows r3 up to r^2.
NtdModel procedure3(const DenseTensor& t, const Dims& ranks, std::optional<Index> i_star = {},
                    const SolverConfig& cfg = {});

// procedure3 on the slice combinations given by the columns of an
// invertible n3 x n3 mixing matrix, undone before the NMF step. The matrix
// is Gaussian (resampled while cond > 1e8) unless given.
NtdModel procedure4(const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg = {},
                    const std::optional<Mat>& mixing = {});

// Order d: min-vol nTD of unfold(t, I) and multi-factor Kronecker splitting
// of both sides. Needs prod_{i in I} r_i = prod_{j not in I} r_j.
NtdModel procedure_d0(const DenseTensor& t, const Dims& ranks, const ModeSet& I, const SolverConfig& cfg = {});

// Order d with r_0 = r_1 = r and r_i <= r: a [0,1]-slice for U0, U1, then
// one [0,i]-slice per remaining mode. tuples[0] fixes modes 2..d-1 of the
// first slice; tuples[i-1] fixes the modes other than 0 and i, ascending.
// Missing tuples are searched: the all-zero tuple plus 200 random ones.
NtdModel procedure_d1(const DenseTensor& t, const Dims& ranks, const std::vector<std::vector<Index>>& tuples = {},
                      const SolverConfig& cfg = {});

// Order d over a partition I | J | K with prod_I r = prod_K r = r and
// prod_J r <= r^2: (J,K)-slice i_J for the grouped U_I and U_K, min-vol NMF
// of all projected slices for U_J, then Kronecker splitting of each group.
NtdModel procedure_d3(const DenseTensor& t, const Dims& ranks, const ModePartition& partition,
                      const std::optional<std::vector<Index>>& i_J = {}, const SolverConfig& cfg = {});

// Separable NMF of every single-mode unfolding.
NtdModel separable_orderd(const DenseTensor& t, const Dims& ranks, double feas_tol = 1e-9);

}  // namespace ntd
