#pragma once

// Comparing recovered models to ground truth and checking instance
// assumptions.

#include <optional>
#include <string>
#include <vector>

#include "ntd/model.hpp"
#include "ntd/procedures.hpp"

namespace ntd {

struct ColumnAlignment {
  std::vector<Index> perm;  // estimate column perm[k] matches reference column k
  double error = 0;         // max_k ||est(:, perm[k]) - ref(:, k)|| / ||ref(:, k)||
};

// Optimal assignment of estimate columns to reference columns, minimizing
// the summed relative column errors.
ColumnAlignment align_columns(const Mat& est, const Mat& ref);

struct AlignmentResult {
  std::vector<std::vector<Index>> perms;  // per mode, as in ColumnAlignment
  std::vector<double> factor_errors;
  double core_error = 0;  // relative, after permuting the estimate core
  bool matched = false;
};

// Essential uniqueness check: column-normalizes both models, aligns each
// factor and compares the permuted cores. `matched` when every error is at
// most tol.
AlignmentResult essential_match(const NtdModel& est, const NtdModel& truth, double tol = 1e-6);

struct ModelError {
  double value = 0;
  bool absolute = false;  // true when the reference tensor is zero
};
ModelError model_error(const NtdModel& m, const DenseTensor& t);

struct RankProfile {
  std::vector<Index> unfolding;                  // rank of unfold(t, {k}) for every k
  std::vector<std::vector<Index>> slice_ranks;   // per mode, rank of every slice along it
};
RankProfile rank_profile(const DenseTensor& t);

enum class Verdict { pass, fail, undetermined };
std::string to_string(Verdict v);

struct AssumptionItem {
  std::string name;
  Verdict verdict = Verdict::undetermined;
  std::string detail;
};

struct AssumptionReport {
  std::string assumption;
  std::vector<AssumptionItem> checks;
  Verdict overall = Verdict::undetermined;  // fail if any check fails, pass if all pass
};

// Assumption identifiers: A4.1, A4.x-unfold, A4.2, A4.3, A4.4, A4.5, A5.1,
// A5.2, A5.3, A5.4, A-sep. `modes` is the unfolding set for A5.2 and
// `partition` the I | J | K split for A5.4; both have defaults when absent.
// `seed` drives the random span combinations and refutation searches.
AssumptionReport validate_assumptions(const NtdModel& truth, const std::string& assumption,
                                      const std::optional<ModeSet>& modes = {},
                                      const std::optional<ModePartition>& partition = {}, std::uint64_t seed = 0);

const std::vector<std::string>& assumption_names();

// Objective values the ground truth attains on the problems a procedure
// solved, read off its diagnostics. A min-vol procedure that returns
// objectives no larger than these must be essentially unique on an
// instance satisfying the assumptions.
std::vector<double> reference_objectives(const std::string& procedure, const NtdModel& truth,
                                         const NtdModel& estimate);

}  // namespace ntd
