#include "ntd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "ntd/cone.hpp"
#include "ntd/kron.hpp"
#include "ntd/linalg.hpp"

namespace ntd {

namespace {

// Shortest augmenting path assignment (Jonker-Volgenant style potentials).
// Returns col_of_row with cost(row, col_of_row[row]) summed minimal; square input.
std::vector<Index> hungarian(const Mat& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0), v(static_cast<std::size_t>(n + 1), 0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(p[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> col_of_row(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j) col_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return col_of_row;
}

double relative_col_error(const Mat& est, Index j, const Mat& ref, Index k) {
  const double d = (est.col(j) - ref.col(k)).norm();
  const double n = ref.col(k).norm();
  return n > 0 ? d / n : d;
}

DenseTensor permute_core(const DenseTensor& core, const std::vector<std::vector<Index>>& perms) {
  DenseTensor out(core.dims());
  for (Index flat = 0; flat < core.size(); ++flat) {
    auto k = unravel(flat, core.dims());
    for (std::size_t m = 0; m < k.size(); ++m) k[m] = perms[m][static_cast<std::size_t>(k[m])];
    out.data()(flat) = core.data()(ravel(k, core.dims()));
  }
  return out;
}

// ---- assumption checks ----

struct Checker {
  AssumptionReport report;
  const NtdModel& truth;
  DenseTensor t;
  std::uint64_t seed;
  std::uint64_t stream = 0;
  EnumerationCap cap{};

  Checker(const NtdModel& m, const std::string& id, std::uint64_t s) : truth(m), t(reconstruct(m)), seed(s) {
    report.assumption = id;
  }

  Rng next_rng() { return substream(seed, 500 + stream++); }

  void add(std::string name, Verdict v, std::string detail = {}) {
    report.checks.push_back({std::move(name), v, std::move(detail)});
  }
  void add(std::string name, bool ok, std::string detail = {}) {
    add(std::move(name), ok ? Verdict::pass : Verdict::fail, std::move(detail));
  }

  int order() const { return static_cast<int>(truth.factors.size()); }
  Index rank(int k) const { return truth.core.dim(k); }
  const Mat& u(int k) const { return truth.factors[static_cast<std::size_t>(k)]; }

  static std::string label(const ModeSet& s) {
    std::string out = "U";
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "x" : "") + std::to_string(s[k] + 1);
    return out;
  }

  void base() {
    for (int k = 0; k < order(); ++k) {
      const std::string n = "U" + std::to_string(k + 1);
      const Mat& f = u(k);
      add(n + " nonnegative", f.minCoeff() >= 0.0);
      const double dev = (f.colwise().sum().array() - 1.0).abs().maxCoeff();
      std::ostringstream os;
      os << "max |column sum - 1| = " << dev;
      add(n + " unit column sums", dev <= 1e-9, os.str());
      add(n + " no zero columns", (f.cwiseAbs().colwise().sum().array() > 0).all());
    }
  }

  void ssc(const Mat& h, const std::string& name) {
    SscOptions o;
    o.refute_seed = derive_seed(seed, 600 + stream++);
    const SscReport r = check_ssc(h, o);
    const auto v = r.ssc();
    std::string detail = r.method == SscMethod::exact_enumeration ? "exact enumeration" : "beyond enumeration cap";
    if (!v) add(name + " SSC", Verdict::undetermined, detail + ", no refutation found");
    else add(name + " SSC", *v, detail);
  }

  // SSC of the Kronecker product of the factors in `modes`.
  void group_ssc(const ModeSet& modes) {
    const std::string name = label(modes);
    if (modes.size() == 1) return ssc(u(modes[0]), name);
    std::vector<Mat> fs;
    for (int m : modes) fs.push_back(u(m));
    const Mat k = kron(fs);
    if (k.rows() <= cap.max_rows && k.cols() <= cap.max_rank) return ssc(k, name);

    // Kronecker products of separable matrices are separable, and an SSC
    // matrix times a separable one is SSC.
    int non_separable = 0, which = -1;
    for (std::size_t i = 0; i < fs.size(); ++i)
      if (!check_separable(fs[i]).separable) {
        ++non_separable;
        which = static_cast<int>(i);
      }
    if (non_separable == 0) return add(name + " SSC", Verdict::pass, "all members separable");
    if (non_separable == 1) {
      const Mat& f = fs[static_cast<std::size_t>(which)];
      if (f.rows() <= cap.max_rows && f.cols() <= cap.max_rank) {
        SscOptions o;
        o.refute_seed = derive_seed(seed, 600 + stream++);
        if (check_ssc(f, o).ssc() == true) return add(name + " SSC", Verdict::pass, "SSC member times separable members");
      }
    }
    if (fs.size() == 2) {
      bool in_cap = true;
      for (const auto& f : fs) in_cap = in_cap && f.rows() <= cap.max_rows && f.cols() <= cap.max_rank;
      if (in_cap) {
        const double p1 = estimate_min_p(fs[0]), p2 = estimate_min_p(fs[1]);
        if (std::isfinite(p1) && std::isfinite(p2) && kron_ssc_sufficient(fs[0].cols(), p1, fs[1].cols(), p2)) {
          std::ostringstream os;
          os << "sufficient condition with p1 = " << p1 << ", p2 = " << p2;
          return add(name + " SSC", Verdict::pass, os.str());
        }
      }
    }
    Rng rng = next_rng();
    if (ssc1_refute(k, rng)) return add(name + " SSC", Verdict::fail, "refutation search found a violating direction");
    add(name + " SSC", Verdict::undetermined, "beyond enumeration cap and not certified");
  }

  void equal(const std::string& name, Index got, Index want) {
    add(name, got == want, std::to_string(got) + " vs " + std::to_string(want));
  }

  // Largest slice rank along `mode` of the tensor.
  void some_slice_rank(int mode, Index target) {
    Index best = 0;
    for (Index i = 0; i < t.dim(mode); ++i) {
      const ModeSet rest = ModeSet{mode}.complement(order());
      best = std::max(best, numerical_rank(slice(t, SliceSpec{ModeSet{mode}, {i}, ModeSet{rest[0]},
                                                              ModeSet(std::vector<int>(rest.begin() + 1, rest.end()))})));
    }
    add("some mode-" + std::to_string(mode + 1) + " slice has rank " + std::to_string(target), best >= target,
        "best " + std::to_string(best));
  }

  // Bounded scan over fixed-index tuples, as the order-d procedures do.
  void scanned_slice_rank(const std::string& name, const ModeSet& fixed, const ModeSet& rows, const ModeSet& cols,
                          Index target) {
    std::vector<Index> radices;
    for (int m : fixed) radices.push_back(t.dim(m));
    Rng rng = next_rng();
    std::vector<Index> tup(radices.size(), 0);
    Index best = numerical_rank(slice(t, SliceSpec{fixed, tup, rows, cols}));
    for (int k = 0; k < 200 && best < target; ++k) {
      for (std::size_t m = 0; m < radices.size(); ++m)
        tup[m] = std::uniform_int_distribution<Index>(0, radices[m] - 1)(rng);
      best = std::max(best, numerical_rank(slice(t, SliceSpec{fixed, tup, rows, cols})));
    }
    add(name, best >= target ? Verdict::pass : Verdict::undetermined,
        "best rank " + std::to_string(best) + " of target " + std::to_string(target) +
            (best >= target ? "" : " within the scan budget"));
  }

  // Maximal rank of the span of the core slices along `mode`: 20 random
  // nonnegative combinations, plus the stacked rank as a necessary condition.
  void span_rank(int mode, Index target) {
    const std::string n = "span of core mode-" + std::to_string(mode + 1) + " slices";
    std::vector<Mat> sl;
    for (Index k = 0; k < truth.core.dim(mode); ++k) sl.push_back(mode_slice(truth.core, mode, k));
    Index stacked_cols = 0;
    for (const auto& s : sl) stacked_cols += s.cols();
    Mat stacked(sl.front().rows(), stacked_cols);
    Index c = 0;
    for (const auto& s : sl) {
      stacked.middleCols(c, s.cols()) = s;
      c += s.cols();
    }
    const Index sr = numerical_rank(stacked);
    add(n + " stacked rank", sr >= target, std::to_string(sr) + " vs " + std::to_string(target));
    Rng rng = next_rng();
    Index best = 0;
    for (int trial = 0; trial < 20; ++trial) {
      // Generic rank is the same over the nonnegative orthant of weights.
      const Vec w = gaussian_vector(static_cast<Index>(sl.size()), rng).cwiseAbs();
      Mat comb = Mat::Zero(sl.front().rows(), sl.front().cols());
      for (std::size_t k = 0; k < sl.size(); ++k) comb += w(static_cast<Index>(k)) * sl[k];
      best = std::max(best, numerical_rank(comb));
    }
    add(n + " maximal rank " + std::to_string(target), best >= target, "best of 20 combinations " + std::to_string(best));
  }

  void finish() {
    bool any_fail = false, any_undet = false;
    for (const auto& c : report.checks) {
      any_fail = any_fail || c.verdict == Verdict::fail;
      any_undet = any_undet || c.verdict == Verdict::undetermined;
    }
    report.overall = any_fail ? Verdict::fail : any_undet ? Verdict::undetermined : Verdict::pass;
  }
};

void require_order(const NtdModel& m, int lo, int hi, const std::string& id) {
  const int d = static_cast<int>(m.factors.size());
  if (d < lo || d > hi) throw PreconditionError(id + " does not apply to an order-" + std::to_string(d) + " model");
}

std::optional<ModeSet> default_unfolding(const Dims& ranks) {
  const int d = static_cast<int>(ranks.size());
  for (unsigned mask = 1; mask + 1 < (1u << d); ++mask) {
    std::vector<int> s;
    for (int k = 0; k < d; ++k)
      if (mask & (1u << k)) s.push_back(k);
    const ModeSet I(s);
    if (group_size(ranks, I) == group_size(ranks, I.complement(d))) return I;
  }
  return std::nullopt;
}

}  // namespace

ColumnAlignment align_columns(const Mat& est, const Mat& ref) {
  if (est.rows() != ref.rows() || est.cols() != ref.cols()) throw PreconditionError("factor shapes differ");
  const Index r = ref.cols();
  Mat cost(r, r);
  for (Index k = 0; k < r; ++k)
    for (Index j = 0; j < r; ++j) cost(k, j) = relative_col_error(est, j, ref, k);
  ColumnAlignment a;
  a.perm = r > 0 ? hungarian(cost) : std::vector<Index>{};
  for (Index k = 0; k < r; ++k) a.error = std::max(a.error, cost(k, a.perm[static_cast<std::size_t>(k)]));
  return a;
}

AlignmentResult essential_match(const NtdModel& est, const NtdModel& truth, double tol) {
  if (est.factors.size() != truth.factors.size() || est.core.dims() != truth.core.dims())
    throw PreconditionError("models have different orders or ranks");
  const NtdModel a = column_normalized(est), b = column_normalized(truth);
  AlignmentResult res;
  for (std::size_t k = 0; k < a.factors.size(); ++k) {
    const ColumnAlignment c = align_columns(a.factors[k], b.factors[k]);
    res.perms.push_back(c.perm);
    res.factor_errors.push_back(c.error);
  }
  const DenseTensor pc = permute_core(a.core, res.perms);
  const double nb = b.core.norm();
  const double diff = (pc.data() - b.core.data()).norm();
  res.core_error = nb > 0 ? diff / nb : diff;
  res.matched = res.core_error <= tol;
  for (double e : res.factor_errors) res.matched = res.matched && e <= tol;
  return res;
}

ModelError model_error(const NtdModel& m, const DenseTensor& t) {
  if (m.dims() != t.dims()) throw PreconditionError("model and tensor dimensions differ");
  ModelError e;
  e.value = relative_residual(m, t);
  e.absolute = t.norm() == 0.0;
  return e;
}

RankProfile rank_profile(const DenseTensor& t) {
  RankProfile p;
  const int d = t.order();
  for (int k = 0; k < d; ++k) p.unfolding.push_back(numerical_rank(unfold(t, ModeSet{k})));
  for (int k = 0; k < d; ++k) {
    std::vector<Index> ranks;
    const ModeSet rest = ModeSet{k}.complement(d);
    for (Index i = 0; i < t.dim(k); ++i) {
      if (rest.empty()) {
        ranks.push_back(t.data()(i) != 0.0 ? 1 : 0);
        continue;
      }
      const ModeSet rows{rest[0]};
      const ModeSet cols(std::vector<int>(rest.begin() + 1, rest.end()));
      ranks.push_back(numerical_rank(slice(t, SliceSpec{ModeSet{k}, {i}, rows, cols})));
    }
    p.slice_ranks.push_back(std::move(ranks));
  }
  return p;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "undetermined";
  }
}

const std::vector<std::string>& assumption_names() {
  static const std::vector<std::string> names{"A4.1", "A4.x-unfold", "A4.2", "A4.3", "A4.4", "A4.5",
                                              "A5.1", "A5.2",        "A5.3", "A5.4", "A-sep"};
  return names;
}

AssumptionReport validate_assumptions(const NtdModel& truth, const std::string& id, const std::optional<ModeSet>& modes,
                                      const std::optional<ModePartition>& partition, std::uint64_t seed) {
  const auto& names = assumption_names();
  if (std::find(names.begin(), names.end(), id) == names.end())
    throw PreconditionError("unknown assumption '" + id + "'");
  if (truth.factors.empty() || static_cast<int>(truth.factors.size()) != truth.core.order())
    throw PreconditionError("model needs one factor per core mode");

  Checker c(truth, id, seed);
  const int d = c.order();
  const bool order3 = id.rfind("A4", 0) == 0;
  if (order3) require_order(truth, 3, 3, id);
  else if (id != "A-sep") require_order(truth, 3, 64, id);
  c.base();

  const Index r1 = c.rank(0), r2 = c.rank(1), r3 = d > 2 ? c.rank(2) : 0;
  const auto each_ssc = [&] {
    for (int k = 0; k < d; ++k) c.group_ssc(ModeSet{k});
  };

  if (id == "A4.x-unfold") {
    c.equal("r3 = r1 r2", r3, r1 * r2);
    c.equal("rank of core mode-3 unfolding", numerical_rank(unfold(truth.core, ModeSet{2})), r3);
    c.group_ssc(ModeSet{0, 1});
    c.group_ssc(ModeSet{2});
  } else if (id == "A4.2" || id == "A4.3") {
    c.add("r3 <= r = r1 = r2", r1 == r2 && r3 <= r1);
    each_ssc();
    if (id == "A4.2") {
      c.some_slice_rank(2, r1);
      c.some_slice_rank(1, r3);
    } else {
      c.span_rank(2, r1);
      c.span_rank(1, r3);
    }
  } else if (id == "A4.4" || id == "A4.5") {
    c.add("sqrt(r3) <= r = r1 = r2", r1 == r2 && r3 <= r1 * r1);
    each_ssc();
    if (id == "A4.4") c.some_slice_rank(2, r1);
    else c.span_rank(2, r1);
    c.equal("rank of core mode-3 unfolding", numerical_rank(unfold(truth.core, ModeSet{2})), r3);
  } else if (id == "A5.2") {
    const auto I = modes ? modes : default_unfolding(truth.core.dims());
    if (!I) throw PreconditionError("no unfolding with matching rank products");
    detail::check_modes(*I, d);
    if (I->empty() || static_cast<int>(I->size()) >= d) throw PreconditionError("unfolding set must be a proper subset");
    const ModeSet L = I->complement(d);
    const Index rI = group_size(truth.core.dims(), *I), rL = group_size(truth.core.dims(), L);
    c.equal("rank products match", rI, rL);
    c.equal("rank of core unfolding", numerical_rank(unfold(truth.core, *I)), rI);
    c.group_ssc(L);
    c.group_ssc(*I);
  } else if (id == "A5.3") {
    bool pattern = r1 == r2;
    for (int k = 2; k < d; ++k) pattern = pattern && c.rank(k) <= r1;
    c.add("r1 = r2 and r_i <= r", pattern);
    each_ssc();
    for (int i = 1; i < d; ++i) {
      std::vector<int> fixed;
      for (int k = 1; k < d; ++k)
        if (k != i) fixed.push_back(k);
      c.scanned_slice_rank("[1," + std::to_string(i + 1) + "]-slice of rank " + std::to_string(c.rank(i)),
                           ModeSet(fixed), ModeSet{0}, ModeSet{i}, c.rank(i));
    }
  } else if (id == "A5.4") {
    ModePartition p;
    if (partition) {
      p = *partition;
    } else {
      std::vector<int> rest;
      for (int k = 2; k < d; ++k) rest.push_back(k);
      p = ModePartition{ModeSet{0}, ModeSet(rest), ModeSet{1}};
    }
    detail::check_partition(d, {&p.I, &p.J, &p.K});
    const Dims& rk = truth.core.dims();
    const Index r = group_size(rk, p.I), rJ = group_size(rk, p.J);
    c.equal("rank products of I and K match", group_size(rk, p.K), r);
    c.add("rank product of J <= r^2", rJ <= r * r);
    c.group_ssc(p.I);
    c.group_ssc(p.J);
    c.group_ssc(p.K);
    c.scanned_slice_rank("(J,K)-slice of rank " + std::to_string(r), p.J, p.I, p.K, r);
    c.equal("rank of core J-unfolding", numerical_rank(unfold(truth.core, p.J)), rJ);
  } else if (id == "A-sep") {
    for (int k = 0; k < d; ++k) {
      c.add("U" + std::to_string(k + 1) + " separable", check_separable(c.u(k)).separable);
      c.equal("rank of unfolding " + std::to_string(k + 1), numerical_rank(unfold(c.t, ModeSet{k})), c.rank(k));
    }
  }
  c.finish();
  return c.report;
}

std::vector<double> reference_objectives(const std::string& procedure, const NtdModel& truth,
                                         const NtdModel& estimate) {
  const DenseTensor t = reconstruct(truth);
  const auto& diag = estimate.diagnostics;
  const auto get = [&](const std::string& key) -> const std::vector<double>& {
    const auto it = diag.find(key);
    if (it == diag.end()) throw PreconditionError("estimate lacks diagnostic '" + key + "'");
    return it->second;
  };
  const auto idx = [](double v) { return static_cast<Index>(std::llround(v)); };
  const auto& u = truth.factors;
  // Truth objective of an order-2 step on x with truth factors a, b.
  const auto det2 = [](const Mat& x, const Mat& a, const Mat& b) {
    return std::abs((pinv(a) * x * pinv(b).transpose()).determinant());
  };
  // Truth objective of a min-vol NMF step x = w h^T with truth h.
  const auto vol = [](const Mat& x, const Mat& h) {
    const Mat w = x * pinv(h).transpose();
    return (w.transpose() * w).determinant();
  };
  const auto stacked = [&](const std::function<Mat(Index)>& sl, Index n) {
    const Mat p1 = pinv(estimate.factors[0]), p2 = pinv(estimate.factors[1]);
    const Index r = p1.rows();
    Mat s(r * r, n);
    for (Index i = 0; i < n; ++i) {
      const Mat proj = p1 * sl(i) * p2.transpose();
      s.col(i) = Eigen::Map<const Vec>(proj.data(), proj.size());
    }
    return s;
  };

  if (procedure == "0" || procedure == "d0") {
    ModeSet I{2};
    if (procedure == "d0") {
      std::vector<int> m;
      for (double v : get("unfold_modes")) m.push_back(static_cast<int>(idx(v)));
      I = ModeSet(m);
    }
    return {std::abs(unfold(truth.core, I).determinant())};
  }
  if (procedure == "1" || procedure == "2") {
    Mat x1, x2;
    if (procedure == "1") {
      x1 = mode_slice(t, 2, idx(get("slice_index")[0]));
      x2 = mode_slice(t, 1, idx(get("slice_index")[1]));
    } else {
      const auto& a = get("alpha");
      const auto& b = get("beta");
      x1 = slice_combination(t, 2, Vec(Eigen::Map<const Vec>(a.data(), static_cast<Index>(a.size()))));
      x2 = slice_combination(t, 1, Vec(Eigen::Map<const Vec>(b.data(), static_cast<Index>(b.size()))));
    }
    return {det2(x1, u[0], u[1]), vol(pinv(estimate.factors[0]) * x2, u[2])};
  }
  if (procedure == "3") {
    const Mat x1 = mode_slice(t, 2, idx(get("slice_index")[0]));
    const Mat s = stacked([&](Index i) { return mode_slice(t, 2, i); }, t.dim(2));
    return {det2(x1, u[0], u[1]), vol(s, u[2])};
  }
  if (procedure == "4") {
    const auto& m = get("mixing");
    const Index n3 = t.dim(2);
    const Mat a = Eigen::Map<const Mat>(m.data(), n3, n3);
    const Mat x1 = slice_combination(t, 2, Vec(a.col(0)));
    const Mat s = stacked([&](Index i) { return slice_combination(t, 2, Vec(a.col(i))); }, n3) *
                  Eigen::FullPivLU<Mat>(a).inverse();
    return {det2(x1, u[0], u[1]), vol(s, u[2])};
  }
  if (procedure == "d1") {
    const int d = t.order();
    const auto& flats = get("slice_flat");
    const auto slice_of = [&](std::size_t step, int i) {  // step 0 is the [1,2]-slice
      std::vector<int> fixed;
      for (int k = 1; k < d; ++k)
        if (k != i) fixed.push_back(k);
      std::vector<Index> radices;
      for (int k : fixed) radices.push_back(t.dim(k));
      return slice(t, SliceSpec{ModeSet(fixed), unravel(idx(flats[step]), radices), ModeSet{0}, ModeSet{i}});
    };
    std::vector<double> out{det2(slice_of(0, 1), u[0], u[1])};
    const Mat p0 = pinv(estimate.factors[0]);
    for (int i = 2; i < d; ++i)
      out.push_back(vol(p0 * slice_of(static_cast<std::size_t>(i - 1), i), u[static_cast<std::size_t>(i)]));
    return out;
  }
  if (procedure == "d3") {
    const auto modes_of = [&](const std::string& key) {
      std::vector<int> m;
      for (double v : get(key)) m.push_back(static_cast<int>(idx(v)));
      return ModeSet(m);
    };
    const ModeSet I = modes_of("partition_I"), J = modes_of("partition_J"), K = modes_of("partition_K");
    // Grouped factors; the estimate's are column-permuted relative to what
    // the procedure saw, which leaves both objectives unchanged.
    const auto group_of = [](const NtdModel& mdl, const ModeSet& s) {
      std::vector<Mat> f;
      for (int m : s) f.push_back(mdl.factors[static_cast<std::size_t>(m)]);
      return kron(f);
    };
    const auto group = [&](const ModeSet& s) { return group_of(truth, s); };
    std::vector<Index> radices;
    for (int m : J) radices.push_back(t.dim(m));
    const Mat x1 = slice(t, SliceSpec{J, unravel(idx(get("slice_flat")[0]), radices), I, K});
    const Mat uI = group(I), uK = group(K);
    const Mat pi = pinv(group_of(estimate, I)), pk = pinv(group_of(estimate, K));
    const Index nJ = group_size(t.dims(), J);
    const Index r = pi.rows();
    Mat s(r * r, nJ);
    for (Index f = 0; f < nJ; ++f) {
      const Mat proj = pi * slice(t, SliceSpec{J, unravel(f, radices), I, K}) * pk.transpose();
      s.col(f) = Eigen::Map<const Vec>(proj.data(), proj.size());
    }
    return {det2(x1, uI, uK), vol(s, group(J))};
  }
  if (procedure == "sep-d" || procedure == "sep2") return {};
  throw PreconditionError("unknown procedure '" + procedure + "'");
}

}  // namespace ntd
