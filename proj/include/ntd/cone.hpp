#pragma once

#include <optional>
#include <vector>

#include "ntd/linalg.hpp"

namespace ntd {

// Exact checks enumerate the dual cone; beyond these sizes only the
// refutation search runs.
struct EnumerationCap {
  Index max_rank = 8;
  Index max_rows = 60;
};

// Extreme rays of {y : H y >= 0} and the vertices of its cross-section
// {y : H y >= 0, e^T y = 1}.
struct DualCone {
  std::vector<Vec> rays;      // unit 2-norm
  std::vector<Vec> vertices;  // e^T v = 1
  bool pointed = true;        // false when H is column-rank deficient
  bool unbounded = false;     // cross-section unbounded (includes !pointed)
};

// Double-description method; rows of h are the constraints.
DualCone enumerate_dual_vertices(const Mat& h, double tol = 1e-9, EnumerationCap cap = {});

struct SeparableResult {
  bool separable = false;
  std::vector<Index> anchors;  // one row per column, empty when not separable
};

SeparableResult check_separable(const Mat& h, double tol = 1e-9);

enum class SscMethod { exact_enumeration, refutation_search_only };

struct SscReport {
  bool separable = false;
  std::vector<Index> anchors;
  std::optional<bool> ssc1;  // empty = undetermined
  std::optional<bool> ssc2;
  std::vector<Vec> dual_vertices;
  bool unbounded = false;
  double max_vertex_norm = 0;
  std::optional<Vec> refutation;
  SscMethod method = SscMethod::exact_enumeration;

  // Both conditions established; empty when undetermined.
  std::optional<bool> ssc() const {
    if (ssc1 && !*ssc1) return false;
    if (ssc2 && !*ssc2) return false;
    if (ssc1 && ssc2) return true;
    return std::nullopt;
  }
};

struct SscOptions {
  double tol = 1e-9;
  double borderline = 1e-7;  // band for unit-vector contact in SSC2
  EnumerationCap cap{};
  std::uint64_t refute_seed = 0;
  int refute_starts = 16;
};

SscReport check_ssc(const Mat& h, const SscOptions& opts = {});

struct RefuteOptions {
  int starts = 16;
  int iters = 50;
  double tol = 1e-9;
  std::vector<Vec> seeds;  // extra starting directions, tried first
};

// Searches for y with h y >= 0, e^T y = 1 and ||y|| > 1 + tol by repeated
// linearization of ||y||^2 (each step is an LP). A returned y is a
// certificate that SSC1 fails; no result proves nothing.
std::optional<Vec> ssc1_refute(const Mat& h, Rng& rng, const RefuteOptions& opts = {});

// min { v^T x : x >= 0, e^T x = 1, ||x|| <= 1/p }, solved exactly by
// enumerating the support of x (r <= 20).
double cp_min_inner(const Vec& v, double p);

bool check_pssc(const Mat& h, double p, double tol = 1e-9, EnumerationCap cap = {});
bool check_pssc(const DualCone& dual, Index r, double p, double tol = 1e-9);

// Smallest p with the p-SSC, by bisection; +inf when SSC1 fails.
double estimate_min_p(const Mat& h, double tol = 1e-6, EnumerationCap cap = {});

// sqrt((r1-p1^2)/(p1^2 (r1-1))) + sqrt((r2-p2^2)/(p2^2 (r2-1))), taking
// squared expansion factors so boundary cases like p^2 = 2 stay exact.
double kron_ssc_margin_sq(Index r1, double p1_sq, Index r2, double p2_sq);

// margin >= 1 (up to 1e-12 relative rounding slack).
bool kron_ssc_sufficient(Index r1, double p1, Index r2, double p2);

// r1 r2 - 1 < (r1-1)^2 (r2-1) with r1 <= r2 after swapping.
bool counterexample_dims_ok(Index r1, Index r2);

struct ViolationWitness {
  Mat V;  // r1 x r2
  double lambda = 0;
  double c1 = 0;
  double c2 = 0;
};

// For row-stochastic u1, u2 with rows close enough to the barycenters,
// builds V with u1 V u2^T >= 0 and e^T V e < ||V||_F, so that
// vec(V)/e^T V e refutes SSC1 of kron(u1, u2).
std::optional<ViolationWitness> ssc1_violation_witness(const Mat& u1, const Mat& u2);

}  // namespace ntd
