#include "ntd/procedures.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "ntd/kron.hpp"
#include "ntd/linalg.hpp"

namespace ntd {

namespace {

constexpr int kSliceScan = 200;

SolverConfig step_config(const SolverConfig& cfg, std::uint64_t step) {
  SolverConfig c = cfg;
  c.seed = derive_seed(cfg.seed, 100 + step);
  return c;
}

void require_order(const DenseTensor& t, const Dims& ranks, int order_min, int order_max) {
  if (t.order() < order_min || t.order() > order_max)
    throw PreconditionError("tensor order " + std::to_string(t.order()) + " not supported by this procedure");
  if (static_cast<int>(ranks.size()) != t.order()) throw PreconditionError("need one rank per mode");
  for (int k = 0; k < t.order(); ++k) {
    const Index r = ranks[static_cast<std::size_t>(k)];
    if (r < 1) throw PreconditionError("ranks must be positive");
    if (r > t.dim(k)) throw PreconditionError("rank exceeds the dimension of mode " + std::to_string(k));
  }
}

Index prod_ranks(const Dims& ranks, const ModeSet& modes) { return group_size(ranks, modes); }

std::vector<double> as_doubles(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<double> as_doubles(const ModeSet& m) { return std::vector<double>(m.begin(), m.end()); }

// Core from pseudoinverses of the recovered factors; exact whenever each
// factor spans the right column space.
DenseTensor core_by_pinv(const DenseTensor& t, const std::vector<Mat>& factors) {
  std::vector<Mat> p;
  for (const auto& u : factors) p.push_back(pinv(u));
  return multilinear_transform(t, p);
}

NtdModel finish(const DenseTensor& t, NtdModel m, double procedure_id, const SolverConfig& cfg) {
  m.diagnostics["procedure"] = {procedure_id};
  const double res = relative_residual(m, t);
  m.diagnostics["residual"] = {res};
  m.diagnostics["core_nonnegative"] = {m.core.data().minCoeff() >= 0 ? 1.0 : 0.0};
  if (!(res <= cfg.feas_tol)) throw SolverError("reconstruction residual " + std::to_string(res) + " exceeds tolerance");
  return m;
}

void require_slice_rank(const Mat& s, Index target, const std::string& what) {
  const Index k = numerical_rank(s);
  if (k < target)
    throw RankDeficient(what + " has numerical rank " + std::to_string(k) + ", needs " + std::to_string(target));
}

// General slice: fix `fixed` at `tuple`, rows over `rows`, columns over `cols`.
Mat slice_at(const DenseTensor& t, const ModeSet& fixed, const std::vector<Index>& tuple, const ModeSet& rows,
             const ModeSet& cols) {
  return slice(t, SliceSpec{fixed, tuple, rows, cols});
}

std::vector<Index> fixed_dims(const DenseTensor& t, const ModeSet& fixed) {
  std::vector<Index> d;
  for (int m : fixed) d.push_back(t.dim(m));
  return d;
}

// Bounded search for a slice of rank `target`: the all-zero tuple, then
// kSliceScan uniform random tuples; the first tuple with the best rank wins.
std::vector<Index> find_slice(const DenseTensor& t, const ModeSet& fixed, const ModeSet& rows, const ModeSet& cols,
                              Index target, Rng& rng, const std::string& what) {
  const auto radices = fixed_dims(t, fixed);
  std::vector<Index> best(radices.size(), 0);
  Index best_rank = numerical_rank(slice_at(t, fixed, best, rows, cols));
  for (int k = 0; k < kSliceScan && best_rank < target; ++k) {
    std::vector<Index> tup(radices.size());
    for (std::size_t m = 0; m < radices.size(); ++m)
      tup[m] = std::uniform_int_distribution<Index>(0, radices[m] - 1)(rng);
    const Index rk = numerical_rank(slice_at(t, fixed, tup, rows, cols));
    if (rk > best_rank) {
      best_rank = rk;
      best = tup;
    }
  }
  if (best_rank < target)
    throw RankDeficient("no " + what + " of rank " + std::to_string(target) + " found (best " +
                        std::to_string(best_rank) + ")");
  return best;
}

struct GroupSplit {
  std::vector<Mat> factors;
  std::vector<Index> perm;
};

// Splits a grouped factor into per-mode factors; single-mode groups pass through.
GroupSplit split_group(const Mat& u, const DenseTensor& t, const Dims& ranks, const ModeSet& modes) {
  GroupSplit g;
  if (modes.size() == 1) {
    g.factors = {u};
    g.perm.resize(static_cast<std::size_t>(u.cols()));
    std::iota(g.perm.begin(), g.perm.end(), Index{0});
    return g;
  }
  KronShape shapes;
  for (int m : modes) shapes.push_back({t.dim(m), ranks[static_cast<std::size_t>(m)]});
  auto s = kron_split_multi(u, shapes);
  g.factors = std::move(s.factors);
  g.perm = std::move(s.perm);
  return g;
}

// Core entry at multi-index k reads value(q_0, q_1, ...) where q_g is the
// mixed-radix index of k restricted to group g, mapped through perms[g].
template <typename F>
DenseTensor assemble_core(const Dims& ranks, const std::vector<ModeSet>& groups,
                          const std::vector<std::vector<Index>>& perms, F value) {
  DenseTensor core(ranks);
  std::vector<std::vector<Index>> radices;
  for (const auto& g : groups) {
    std::vector<Index> r;
    for (int m : g) r.push_back(ranks[static_cast<std::size_t>(m)]);
    radices.push_back(r);
  }
  for (Index flat = 0; flat < core.size(); ++flat) {
    const auto k = unravel(flat, ranks);
    std::vector<Index> q(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<Index> part;
      for (int m : groups[g]) part.push_back(k[static_cast<std::size_t>(m)]);
      q[g] = perms[g][static_cast<std::size_t>(ravel(part, radices[g]))];
    }
    core.data()(flat) = value(q);
  }
  return core;
}

void place_factors(NtdModel& m, const ModeSet& modes, const std::vector<Mat>& factors) {
  for (std::size_t k = 0; k < modes.size(); ++k) m.factors[static_cast<std::size_t>(modes[k])] = factors[k];
}

void check_order3_square(const Dims& ranks) {
  if (ranks[0] != ranks[1]) throw PreconditionError("slice procedures need r1 = r2");
}

// Shared tail of procedures 1 and 2: m3 ~ U1 (.) U2^T, m2 ~ U1 (.) U3^T.
NtdModel two_slice_pipeline(const DenseTensor& t, const Dims& ranks, const Mat& m3, const Mat& m2,
                            const SolverConfig& cfg, NtdModel m) {
  const Index r = ranks[0], r3 = ranks[2];
  require_slice_rank(m3, r, "mode-3 slice");
  require_slice_rank(m2, r3, "mode-2 slice");
  const Order2Ntd o2 = minvol_order2_ntd(m3, r, step_config(cfg, 1));
  const NmfResult nmf = minvol_nmf(pinv(o2.u1) * m2, r3, step_config(cfg, 2));
  m.factors = {o2.u1, o2.u2, nmf.h};
  m.core = core_by_pinv(t, m.factors);
  m.diagnostics["objective"] = {o2.abs_det, nmf.volume};
  return m;
}

// Shared tail of procedures 3 and 4: step one on m3, then min-vol NMF of
// `stacked` (column i = vec(U1^+ slice_i U2^+T)) after right-multiplying by `unmix`.
NtdModel stacked_pipeline(const DenseTensor& t, const Dims& ranks, const Mat& m3,
                          const std::function<Mat(Index)>& slice_i, const Mat* unmix, const SolverConfig& cfg,
                          NtdModel m) {
  const Index r = ranks[0], r3 = ranks[2];
  require_slice_rank(m3, r, "mode-3 slice");
  const Order2Ntd o2 = minvol_order2_ntd(m3, r, step_config(cfg, 1));
  const Mat p1 = pinv(o2.u1), p2 = pinv(o2.u2);
  Mat s(r * r, t.dim(2));
  for (Index i = 0; i < t.dim(2); ++i) {
    const Mat proj = p1 * slice_i(i) * p2.transpose();
    s.col(i) = Eigen::Map<const Vec>(proj.data(), proj.size());
  }
  if (unmix) s = s * *unmix;
  const NmfResult nmf = minvol_nmf(s, r3, step_config(cfg, 2));
  m.factors = {o2.u1, o2.u2, nmf.h};
  m.core = fold(nmf.w, ModeSet{2}, {r, r, r3});
  m.diagnostics["objective"] = {o2.abs_det, nmf.volume};
  return m;
}

}  // namespace

Index select_max_rank_slice(const DenseTensor& t, int mode, double rank_factor) {
  if (t.order() < 3) throw PreconditionError("slices need an order of at least 3");
  if (mode < 0 || mode >= t.order()) throw PreconditionError("mode out of range");
  const ModeSet rest = ModeSet{mode}.complement(t.order());
  const ModeSet rows{rest[0]};
  const ModeSet cols(std::vector<int>(rest.begin() + 1, rest.end()));
  Index best = 0, best_rank = -1;
  for (Index i = 0; i < t.dim(mode); ++i) {
    const Index rk = numerical_rank(slice_at(t, ModeSet{mode}, {i}, rows, cols), rank_factor);
    if (rk > best_rank) {
      best_rank = rk;
      best = i;
    }
  }
  return best;
}

NtdModel procedure0(const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg) {
  require_order(t, ranks, 3, 3);
  if (ranks[2] != ranks[0] * ranks[1]) throw PreconditionError("procedure 0 needs r3 = r1 r2");
  NtdModel m = procedure_d0(t, ranks, ModeSet{2}, cfg);
  m.diagnostics.erase("unfold_modes");
  m.diagnostics["procedure"] = {0};
  return m;
}

NtdModel procedure1(const DenseTensor& t, const Dims& ranks, std::optional<Index> i2, std::optional<Index> i3,
                    const SolverConfig& cfg) {
  require_order(t, ranks, 3, 3);
  check_order3_square(ranks);
  if (ranks[2] > ranks[0]) throw PreconditionError("procedure 1 needs r3 <= r");
  const Index s3 = i3 ? *i3 : select_max_rank_slice(t, 2);
  const Index s2 = i2 ? *i2 : select_max_rank_slice(t, 1);
  if (s3 < 0 || s3 >= t.dim(2) || s2 < 0 || s2 >= t.dim(1)) throw PreconditionError("slice index out of range");
  NtdModel m;
  m.diagnostics["slice_index"] = {static_cast<double>(s3), static_cast<double>(s2)};
  m = two_slice_pipeline(t, ranks, mode_slice(t, 2, s3), mode_slice(t, 1, s2), cfg, std::move(m));
  return finish(t, std::move(m), 1, cfg);
}

NtdModel procedure2(const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg,
                    const std::optional<SliceWeights>& weights) {
  require_order(t, ranks, 3, 3);
  check_order3_square(ranks);
  if (ranks[2] > ranks[0]) throw PreconditionError("procedure 2 needs r3 <= r");
  SliceWeights w;
  if (weights) {
    w = *weights;
  } else {
    Rng rng = substream(cfg.seed, 2);
    w.alpha = gaussian_vector(t.dim(2), rng);
    w.beta = gaussian_vector(t.dim(1), rng);
  }
  if (w.alpha.size() != t.dim(2) || w.beta.size() != t.dim(1)) throw PreconditionError("weight lengths do not match");
  NtdModel m;
  m.diagnostics["alpha"] = as_doubles(w.alpha);
  m.diagnostics["beta"] = as_doubles(w.beta);
  m = two_slice_pipeline(t, ranks, slice_combination(t, 2, w.alpha), slice_combination(t, 1, w.beta), cfg,
                         std::move(m));
  return finish(t, std::move(m), 2, cfg);
}

NtdModel procedure3(const DenseTensor& t, const Dims& ranks, std::optional<Index> i_star, const SolverConfig& cfg) {
  require_order(t, ranks, 3, 3);
  check_order3_square(ranks);
  if (ranks[2] > ranks[0] * ranks[0]) throw PreconditionError("procedure 3 needs r3 <= r^2");
  const Index s = i_star ? *i_star : select_max_rank_slice(t, 2);
  if (s < 0 || s >= t.dim(2)) throw PreconditionError("slice index out of range");
  NtdModel m;
  m.diagnostics["slice_index"] = {static_cast<double>(s)};
  m = stacked_pipeline(
      t, ranks, mode_slice(t, 2, s), [&](Index i) { return mode_slice(t, 2, i); }, nullptr, cfg, std::move(m));
  return finish(t, std::move(m), 3, cfg);
}

NtdModel procedure4(const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg,
                    const std::optional<Mat>& mixing) {
  require_order(t, ranks, 3, 3);
  check_order3_square(ranks);
  if (ranks[2] > ranks[0] * ranks[0]) throw PreconditionError("procedure 4 needs r3 <= r^2");
  const Index n3 = t.dim(2);
  Mat a;
  int attempts = 0;
  if (mixing) {
    a = *mixing;
    if (a.rows() != n3 || a.cols() != n3) throw PreconditionError("mixing matrix must be n3 x n3");
    if (!std::isfinite(condition_number(a))) throw PreconditionError("mixing matrix is singular");
  } else {
    Rng rng = substream(cfg.seed, 4);
    for (;;) {
      ++attempts;
      a = gaussian_matrix(n3, n3, rng);
      if (condition_number(a) <= 1e8) break;
      if (attempts >= 10) throw SolverError("no well-conditioned mixing matrix in 10 draws");
    }
  }
  const Mat unmix = Eigen::FullPivLU<Mat>(a).inverse();
  NtdModel m;
  m.diagnostics["mixing"] = std::vector<double>(a.data(), a.data() + a.size());
  m.diagnostics["mixing_attempts"] = {static_cast<double>(attempts)};
  const Mat first = slice_combination(t, 2, Vec(a.col(0)));
  m = stacked_pipeline(
      t, ranks, first, [&](Index i) { return slice_combination(t, 2, Vec(a.col(i))); }, &unmix, cfg,
      std::move(m));
  return finish(t, std::move(m), 4, cfg);
}

NtdModel procedure_d0(const DenseTensor& t, const Dims& ranks, const ModeSet& I, const SolverConfig& cfg) {
  require_order(t, ranks, 3, 64);
  detail::check_modes(I, t.order());
  if (I.empty() || static_cast<int>(I.size()) >= t.order())
    throw PreconditionError("unfolding modes must be a proper non-empty subset");
  const ModeSet L = I.complement(t.order());
  const Index r = prod_ranks(ranks, I);
  if (prod_ranks(ranks, L) != r) throw PreconditionError("rank products on both sides of the unfolding differ");

  const Order2Ntd o2 = minvol_order2_ntd(unfold(t, I), r, step_config(cfg, 1));
  const GroupSplit left = split_group(o2.u1, t, ranks, L);
  const GroupSplit right = split_group(o2.u2, t, ranks, I);

  NtdModel m;
  m.factors.resize(static_cast<std::size_t>(t.order()));
  place_factors(m, L, left.factors);
  place_factors(m, I, right.factors);
  m.core = assemble_core(ranks, {L, I}, {left.perm, right.perm},
                         [&](const std::vector<Index>& q) { return o2.g(q[0], q[1]); });
  m.diagnostics["objective"] = {o2.abs_det};
  m.diagnostics["unfold_modes"] = as_doubles(I);
  return finish(t, std::move(m), 10, cfg);
}

NtdModel procedure_d1(const DenseTensor& t, const Dims& ranks, const std::vector<std::vector<Index>>& tuples,
                      const SolverConfig& cfg) {
  require_order(t, ranks, 3, 64);
  const int d = t.order();
  const Index r = ranks[0];
  if (ranks[1] != r) throw PreconditionError("procedure d.1 needs r1 = r2");
  for (int i = 2; i < d; ++i)
    if (ranks[static_cast<std::size_t>(i)] > r) throw PreconditionError("procedure d.1 needs r_i <= r");
  if (!tuples.empty() && static_cast<int>(tuples.size()) != d - 1)
    throw PreconditionError("need one fixed-index tuple per slice (d - 1)");

  Rng rng = substream(cfg.seed, 11);
  NtdModel m;
  m.factors.resize(static_cast<std::size_t>(d));
  std::vector<double> flats, objective;

  auto pick = [&](std::size_t step, const ModeSet& fixed, const ModeSet& rows, const ModeSet& cols, Index target,
                  const std::string& what) {
    std::vector<Index> tup;
    if (!tuples.empty()) {
      tup = tuples[step];
      require_slice_rank(slice_at(t, fixed, tup, rows, cols), target, what);
    } else {
      tup = find_slice(t, fixed, rows, cols, target, rng, what);
    }
    flats.push_back(static_cast<double>(ravel(tup, fixed_dims(t, fixed))));
    return slice_at(t, fixed, tup, rows, cols);
  };

  std::vector<int> rest;
  for (int k = 2; k < d; ++k) rest.push_back(k);
  const Mat s12 = pick(0, ModeSet(rest), ModeSet{0}, ModeSet{1}, r, "[1,2]-slice");
  const Order2Ntd o2 = minvol_order2_ntd(s12, r, step_config(cfg, 1));
  m.factors[0] = o2.u1;
  m.factors[1] = o2.u2;
  objective.push_back(o2.abs_det);
  const Mat p0 = pinv(o2.u1);

  for (int i = 2; i < d; ++i) {
    std::vector<int> fixed;
    for (int k = 1; k < d; ++k)
      if (k != i) fixed.push_back(k);
    const Index ri = ranks[static_cast<std::size_t>(i)];
    const Mat s = pick(static_cast<std::size_t>(i - 1), ModeSet(fixed), ModeSet{0}, ModeSet{i}, ri,
                       "[1," + std::to_string(i + 1) + "]-slice");
    const NmfResult nmf = minvol_nmf(p0 * s, ri, step_config(cfg, static_cast<std::uint64_t>(i)));
    m.factors[static_cast<std::size_t>(i)] = nmf.h;
    objective.push_back(nmf.volume);
  }
  m.core = core_by_pinv(t, m.factors);
  m.diagnostics["objective"] = objective;
  m.diagnostics["slice_flat"] = flats;
  return finish(t, std::move(m), 11, cfg);
}

NtdModel procedure_d3(const DenseTensor& t, const Dims& ranks, const ModePartition& p,
                      const std::optional<std::vector<Index>>& i_J, const SolverConfig& cfg) {
  require_order(t, ranks, 3, 64);
  detail::check_partition(t.order(), {&p.I, &p.J, &p.K});
  const Index r = prod_ranks(ranks, p.I);
  if (prod_ranks(ranks, p.K) != r) throw PreconditionError("rank products of I and K differ");
  const Index rJ = prod_ranks(ranks, p.J);
  if (rJ > r * r) throw PreconditionError("rank product of J exceeds r^2");

  std::vector<Index> tup;
  if (i_J) {
    tup = *i_J;
    require_slice_rank(slice_at(t, p.J, tup, p.I, p.K), r, "(J,K)-slice");
  } else {
    Rng rng = substream(cfg.seed, 13);
    tup = find_slice(t, p.J, p.I, p.K, r, rng, "(J,K)-slice");
  }
  const Order2Ntd o2 = minvol_order2_ntd(slice_at(t, p.J, tup, p.I, p.K), r, step_config(cfg, 1));
  const Mat pi = pinv(o2.u1), pk = pinv(o2.u2);

  const auto radices = fixed_dims(t, p.J);
  const Index nJ = group_size(t.dims(), p.J);
  Mat s(r * r, nJ);
  for (Index f = 0; f < nJ; ++f) {
    const Mat proj = pi * slice_at(t, p.J, unravel(f, radices), p.I, p.K) * pk.transpose();
    s.col(f) = Eigen::Map<const Vec>(proj.data(), proj.size());
  }
  const NmfResult nmf = minvol_nmf(s, rJ, step_config(cfg, 2));

  const GroupSplit gi = split_group(o2.u1, t, ranks, p.I);
  const GroupSplit gk = split_group(o2.u2, t, ranks, p.K);
  const GroupSplit gj = split_group(nmf.h, t, ranks, p.J);
  NtdModel m;
  m.factors.resize(static_cast<std::size_t>(t.order()));
  place_factors(m, p.I, gi.factors);
  place_factors(m, p.K, gk.factors);
  place_factors(m, p.J, gj.factors);
  m.core = assemble_core(ranks, {p.I, p.K, p.J}, {gi.perm, gk.perm, gj.perm},
                         [&](const std::vector<Index>& q) { return nmf.w(q[0] + r * q[1], q[2]); });
  m.diagnostics["objective"] = {o2.abs_det, nmf.volume};
  m.diagnostics["slice_flat"] = {static_cast<double>(ravel(tup, radices))};
  m.diagnostics["partition_I"] = as_doubles(p.I);
  m.diagnostics["partition_J"] = as_doubles(p.J);
  m.diagnostics["partition_K"] = as_doubles(p.K);
  return finish(t, std::move(m), 13, cfg);
}

NtdModel separable_orderd(const DenseTensor& t, const Dims& ranks, double feas_tol) {
  require_order(t, ranks, 2, 64);
  NtdModel m;
  for (int k = 0; k < t.order(); ++k) {
    const Index rk = ranks[static_cast<std::size_t>(k)];
    const Mat x = unfold(t, ModeSet{k});
    const Index got = numerical_rank(x);
    if (got != rk)
      throw RankDeficient("unfolding " + std::to_string(k) + " has rank " + std::to_string(got) + ", expected " +
                          std::to_string(rk));
    const SeparableNmf sep = spa_separable_nmf(x, rk, feas_tol);
    m.factors.push_back(sep.h);
    std::vector<double> anchors(sep.anchors.begin(), sep.anchors.end());
    m.diagnostics["anchors_" + std::to_string(k)] = anchors;
  }
  m.core = core_by_pinv(t, m.factors);
  SolverConfig cfg;
  cfg.feas_tol = feas_tol;
  return finish(t, std::move(m), 20, cfg);
}

}  // namespace ntd
