#include "ntd/synth.hpp"

#include <algorithm>
#include <numeric>

#include "ntd/kron.hpp"
#include "ntd/linalg.hpp"

namespace ntd {

namespace {

Mat normalize_columns(Mat m) {
  const Eigen::RowVectorXd sums = m.colwise().sum();
  for (Index c = 0; c < m.cols(); ++c) m.col(c) /= sums(c);
  return m;
}

Index best_slice_rank(const DenseTensor& t, int mode) {
  const ModeSet rest = ModeSet{mode}.complement(t.order());
  const ModeSet rows{rest[0]};
  const ModeSet cols(std::vector<int>(rest.begin() + 1, rest.end()));
  Index best = 0;
  for (Index i = 0; i < t.dim(mode); ++i)
    best = std::max(best, numerical_rank(slice(t, SliceSpec{ModeSet{mode}, {i}, rows, cols})));
  return best;
}

Index best_span_rank(const DenseTensor& t, int mode, Rng& rng) {
  const ModeSet rest = ModeSet{mode}.complement(t.order());
  const ModeSet rows{rest[0]};
  const ModeSet cols(std::vector<int>(rest.begin() + 1, rest.end()));
  Index best = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec w = gaussian_vector(t.dim(mode), rng).cwiseAbs();
    best = std::max(best, numerical_rank(slice_combination(t, ModeSet{mode}, rows, cols, w)));
  }
  return best;
}

// Group sizes as even as possible; the stress construction needs the two
// largest to cover fewer than r indices.
std::vector<Index> stress_groups(Index r, Index r3) {
  if (r3 < 3 || r3 > r) throw PreconditionError("deficient-slice cores need 3 <= r3 <= r");
  std::vector<Index> group(static_cast<std::size_t>(r));
  for (Index a = 0; a < r; ++a) group[static_cast<std::size_t>(a)] = a % r3;
  const Index top2 = (r + r3 - 1) / r3 + (r + r3 - 2) / r3;
  if (top2 >= r) throw PreconditionError("two slice groups would already reach rank r");
  return group;
}

// G_k = A D_k B with D_k the indicator of group k: each mode-3 slice has
// rank |group k| and any two of them together stay below r.
DenseTensor stress_core(const Dims& ranks, bool nonnegative, Rng& rng) {
  const Index r = ranks[0], r3 = ranks[2];
  const auto group = stress_groups(r, r3);
  Mat a = gaussian_matrix(r, r, rng), b = gaussian_matrix(r, r, rng);
  if (nonnegative) {
    a = a.cwiseAbs();
    b = b.cwiseAbs();
  }
  DenseTensor core(ranks);
  for (Index k = 0; k < r3; ++k) {
    Vec d = Vec::Zero(r);
    for (Index m = 0; m < r; ++m)
      if (group[static_cast<std::size_t>(m)] == k) d(m) = 1;
    const Mat g = a * d.asDiagonal() * b;
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < r; ++i) core(std::vector<Index>{i, j, k}) = g(i, j);
  }
  return core;
}

bool core_ok(const DenseTensor& core, const CoreConstraints& c, Rng& rng) {
  for (const auto& [modes, rank] : c.unfolding_ranks)
    if (numerical_rank(unfold(core, modes)) != rank) return false;
  for (const auto& [mode, rank] : c.slice_ranks)
    if (best_slice_rank(core, mode) < rank) return false;
  for (const auto& [mode, rank] : c.span_ranks)
    if (best_span_rank(core, mode, rng) < rank) return false;
  if (c.deficient_slices && best_slice_rank(core, 2) >= core.dim(0)) return false;
  return true;
}

// SSC when the exact check can certify it, separable otherwise or for r <= 2.
Mat draw_factor(Index n, Index r, bool separable, Rng& rng) {
  const EnumerationCap cap{};
  if (separable || r <= 2 || r > cap.max_rank || n > cap.max_rows) return gen_separable_factor(n, r, rng);
  return gen_ssc_factor(n, r, 2, rng, 100, cap);
}

}  // namespace

Mat sample_sparse_stochastic(Index n, Index r, Index nnz_per_row, Rng& rng) {
  if (r < 1 || nnz_per_row < 1 || nnz_per_row > r) throw PreconditionError("need 1 <= nnz_per_row <= r");
  if (n * nnz_per_row < r) throw PreconditionError("too few nonzeros to touch every column");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Index> cols(static_cast<std::size_t>(r));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Mat m = Mat::Zero(n, r);
    for (Index i = 0; i < n; ++i) {
      std::iota(cols.begin(), cols.end(), Index{0});
      std::shuffle(cols.begin(), cols.end(), rng);
      for (Index k = 0; k < nnz_per_row; ++k) {
        double v = unif(rng);
        while (v == 0.0) v = unif(rng);
        m(i, cols[static_cast<std::size_t>(k)]) = v;
      }
    }
    if ((m.colwise().sum().array() > 0).all()) return normalize_columns(m);
  }
  throw GenerationFailed("could not touch every column");
}

Mat gen_ssc_factor(Index n, Index r, Index nnz_per_row, Rng& rng, int max_tries, EnumerationCap cap) {
  if (r < 2 || n < r) throw PreconditionError("SSC factors need n >= r >= 2");
  if (r > cap.max_rank || n > cap.max_rows) throw CapExceeded("SSC cannot be certified at this size");
  SscOptions opts;
  opts.cap = cap;
  for (int k = 0; k < max_tries; ++k) {
    Mat m = sample_sparse_stochastic(n, r, nnz_per_row, rng);
    if (check_ssc(m, opts).ssc() == true) return m;
  }
  throw GenerationFailed("no SSC sample in " + std::to_string(max_tries) + " tries");
}

Mat gen_separable_factor(Index n, Index r, Rng& rng) {
  if (r < 1 || n < r) throw PreconditionError("separable factors need n >= r >= 1");
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  Mat m(n, r);
  m.topRows(r).setZero();
  for (Index k = 0; k < r; ++k) m(k, k) = scale(rng);
  m.bottomRows(n - r) = gaussian_matrix(n - r, r, rng).cwiseAbs();
  return normalize_columns(m);
}

DenseTensor gen_core(const Dims& ranks, const CoreConstraints& c, Rng& rng, int max_tries) {
  for (Index r : ranks)
    if (r < 1) throw PreconditionError("core ranks must be positive");
  for (const auto& [modes, rank] : c.unfolding_ranks) {
    detail::check_modes(modes, static_cast<int>(ranks.size()));
    if (rank > std::min(group_size(ranks, modes), group_size(ranks, modes.complement(static_cast<int>(ranks.size())))))
      throw PreconditionError("requested unfolding rank exceeds its shape");
  }
  if (c.deficient_slices && ranks.size() != 3) throw PreconditionError("deficient-slice cores are order 3");
  for (int k = 0; k < max_tries; ++k) {
    DenseTensor core(ranks);
    if (c.deficient_slices) {
      core = stress_core(ranks, c.nonnegative, rng);
    } else {
      core.data() = gaussian_vector(core.size(), rng);
      if (c.nonnegative) core.data() = core.data().cwiseAbs();
    }
    if (core_ok(core, c, rng)) return core;
  }
  throw GenerationFailed("core constraints not met in " + std::to_string(max_tries) + " tries");
}

Instance gen_instance(const std::string& id, const Dims& dims, const Dims& ranks, std::uint64_t seed,
                      const std::optional<ModeSet>& modes, const std::optional<ModePartition>& partition,
                      int max_tries) {
  const auto& names = assumption_names();
  if (std::find(names.begin(), names.end(), id) == names.end())
    throw PreconditionError("unknown assumption '" + id + "'");
  if (dims.size() != ranks.size() || dims.size() < 3) throw PreconditionError("need one rank per mode, order >= 3");
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (ranks[k] < 1 || ranks[k] > dims[k]) throw PreconditionError("ranks must lie in [1, dims]");
  const int d = static_cast<int>(dims.size());
  if (id.rfind("A4", 0) == 0 && d != 3) throw PreconditionError(id + " is an order-3 assumption");

  Instance inst;
  inst.assumption = id;
  inst.seed = seed;

  // Kronecker groups: every member but the last is drawn separable so the
  // group is SSC whenever the last member is.
  std::vector<bool> separable(static_cast<std::size_t>(d), id == "A-sep");
  const auto group_rule = [&](const ModeSet& g) {
    for (std::size_t k = 0; k + 1 < g.size(); ++k) separable[static_cast<std::size_t>(g[k])] = true;
  };
  CoreConstraints cc;
  const Index r3 = ranks[2];
  if (id == "A4.x-unfold") {
    group_rule(ModeSet{0, 1});
    cc.unfolding_ranks.push_back({ModeSet{2}, r3});
  } else if (id == "A4.3" || id == "A4.5") {
    cc.deficient_slices = true;
    cc.span_ranks.push_back({2, ranks[0]});
    if (id == "A4.3") cc.span_ranks.push_back({1, r3});
    else cc.unfolding_ranks.push_back({ModeSet{2}, r3});
  } else if (id == "A4.4") {
    cc.unfolding_ranks.push_back({ModeSet{2}, r3});
  } else if (id == "A5.2") {
    if (!modes) throw PreconditionError("A5.2 needs an unfolding mode set");
    detail::check_modes(*modes, d);
    if (modes->empty() || static_cast<int>(modes->size()) >= d)
      throw PreconditionError("unfolding set must be a proper non-empty subset");
    group_rule(*modes);
    group_rule(modes->complement(d));
    cc.unfolding_ranks.push_back({*modes, group_size(ranks, *modes)});
    inst.modes = modes;
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
    group_rule(p.I);
    group_rule(p.J);
    group_rule(p.K);
    cc.unfolding_ranks.push_back({p.J, group_size(ranks, p.J)});
    inst.partition = p;
  } else if (id == "A-sep") {
    for (int k = 0; k < d; ++k) cc.unfolding_ranks.push_back({ModeSet{k}, ranks[static_cast<std::size_t>(k)]});
  }

  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Rng rng = substream(seed, static_cast<std::uint64_t>(attempt));
    NtdModel m;
    for (int k = 0; k < d; ++k) {
      const auto sk = static_cast<std::size_t>(k);
      // Stress instances need at most two nonzeros per U3 row.
      if (cc.deficient_slices && k == 2) m.factors.push_back(gen_ssc_factor(dims[sk], ranks[sk], 2, rng));
      else m.factors.push_back(draw_factor(dims[sk], ranks[sk], separable[sk], rng));
    }
    try {
      m.core = gen_core(ranks, cc, rng);
    } catch (const GenerationFailed&) {
      continue;
    }
    inst.truth = std::move(m);
    inst.tensor = reconstruct(inst.truth);
    if (cc.deficient_slices && best_slice_rank(inst.tensor, 2) >= ranks[0]) continue;
    inst.report = validate_assumptions(inst.truth, id, inst.modes, inst.partition, derive_seed(seed, 77));
    if (inst.report.overall == Verdict::pass) return inst;
  }
  throw GenerationFailed("no instance passed validation for " + id + " in " + std::to_string(max_tries) + " tries");
}

}  // namespace ntd
