#pragma once

// Ground-truth generators. Every generator validates its output and
// retries; nothing is returned that fails its own contract.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ntd/cone.hpp"
#include "ntd/evaluation.hpp"
#include "ntd/model.hpp"

namespace ntd {

// Nonnegative n x r matrix with nnz_per_row uniform(0,1) entries per row on
// a uniform random support, every column touched, columns summing to one.
Mat sample_sparse_stochastic(Index n, Index r, Index nnz_per_row, Rng& rng);

// sample_sparse_stochastic conditioned on the SSC (rejection sampling).
// Throws CapExceeded when r or n is beyond the exact check, and
// GenerationFailed after max_tries rejections.
Mat gen_ssc_factor(Index n, Index r, Index nnz_per_row, Rng& rng, int max_tries = 100,
                   EnumerationCap cap = {});

// Scaled identity stacked over |Gaussian| rows, column-normalized.
Mat gen_separable_factor(Index n, Index r, Rng& rng);

struct CoreConstraints {
  // (modes, rank) pairs: rank(unfold(core, modes)) must equal rank.
  std::vector<std::pair<ModeSet, Index>> unfolding_ranks;
  // Some mode-k slice of the core has rank target: (mode, target).
  std::vector<std::pair<int, Index>> slice_ranks;
  // The span of the mode-k slices has maximal rank target: (mode, target).
  std::vector<std::pair<int, Index>> span_ranks;
  bool nonnegative = false;
  // Order 3 only: every mode-3 and every mode-2 slice is rank deficient
  // while the spans keep full rank.
  bool deficient_slices = false;
};

DenseTensor gen_core(const Dims& ranks, const CoreConstraints& c, Rng& rng, int max_tries = 100);

struct Instance {
  DenseTensor tensor;
  NtdModel truth;
  std::string assumption;
  std::uint64_t seed = 0;
  std::optional<ModeSet> modes;               // A5.2 unfolding set
  std::optional<ModePartition> partition;     // A5.4 partition
  AssumptionReport report;
};

// Draws factors and a core for the named assumption, composes the tensor
// and retries until validate_assumptions passes. Factors of rank <= 2 are
// drawn separable (a 2-column SSC matrix is separable anyway).
Instance gen_instance(const std::string& assumption, const Dims& dims, const Dims& ranks, std::uint64_t seed,
                      const std::optional<ModeSet>& modes = {},
                      const std::optional<ModePartition>& partition = {}, int max_tries = 20);

}  // namespace ntd
