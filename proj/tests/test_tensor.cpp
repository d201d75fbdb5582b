#include <gtest/gtest.h>

#include "ntd/kron.hpp"
#include "ntd/tensor.hpp"
#include "test_util.hpp"

using namespace ntd;
using ntd::testing::random_model;

namespace {

// Direct evaluation of T_j = sum_i prod_k U_k(j_k, i_k) G_i.
DenseTensor brute_force_transform(const DenseTensor& core, const std::vector<Mat>& us) {
  Dims dims;
  for (const auto& u : us) dims.push_back(u.rows());
  DenseTensor t(dims);
  const Dims& rk = core.dims();
  for (Index jo = 0; jo < t.size(); ++jo) {
    const auto j = unravel(jo, dims);
    double acc = 0;
    for (Index io = 0; io < core.size(); ++io) {
      const auto i = unravel(io, rk);
      double w = core.data()(io);
      for (std::size_t k = 0; k < us.size(); ++k) w *= us[k](j[k], i[k]);
      acc += w;
    }
    t.data()(jo) = acc;
  }
  return t;
}

DenseTensor enumerated_222() {
  DenseTensor t({2, 2, 2});
  for (Index k = 0; k < 2; ++k)
    for (Index j = 0; j < 2; ++j)
      for (Index i = 0; i < 2; ++i) t({i, j, k}) = static_cast<double>(i + 2 * j + 4 * k);
  return t;
}

}  // namespace

TEST(Tensor, LayoutIsFirstIndexFastest) {
  DenseTensor t({2, 3, 4});
  EXPECT_EQ(t.offset({1, 0, 0}), 1);
  EXPECT_EQ(t.offset({0, 1, 0}), 2);
  EXPECT_EQ(t.offset({0, 0, 1}), 6);
  EXPECT_EQ(t.offset({1, 2, 3}), 1 + 2 * 2 + 6 * 3);
  EXPECT_THROW(t.offset({2, 0, 0}), PreconditionError);
  EXPECT_THROW(DenseTensor({2, 0}), PreconditionError);
}

TEST(MultilinearTransform, RankOneCase) {
  Rng rng(1);
  const Vec u = gaussian_vector(3, rng), v = gaussian_vector(4, rng), w = gaussian_vector(2, rng);
  DenseTensor core({1, 1, 1});
  core.data()(0) = 2.5;
  const auto t = multilinear_transform(core, {Mat(u), Mat(v), Mat(w)});
  for (Index k = 0; k < 2; ++k)
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 3; ++i) EXPECT_NEAR(t({i, j, k}), 2.5 * u(i) * v(j) * w(k), 1e-14);
}

TEST(MultilinearTransform, IdentityFactorsReturnCore) {
  Rng rng(2);
  const DenseTensor core({3, 2, 4}, gaussian_vector(24, rng));
  const auto t = multilinear_transform(core, {Mat::Identity(3, 3), Mat::Identity(2, 2), Mat::Identity(4, 4)});
  EXPECT_EQ(t, core);
}

TEST(MultilinearTransform, HandComputedEntry) {
  Mat u(3, 2);
  u << 1, 0, 0, 1, 0.5, 0.5;
  DenseTensor core({2, 2, 1});
  core.data().setOnes();
  const auto t = multilinear_transform(core, {u, u, Mat::Ones(1, 1)});
  EXPECT_DOUBLE_EQ(t({2, 2, 0}), 1.0);
}

TEST(MultilinearTransform, MatchesBruteForceSummation) {
  Rng rng(3);
  for (const Dims& dims : {Dims{4, 3, 5}, Dims{3, 2, 3, 2}}) {
    Dims ranks(dims.size(), 2);
    const auto m = random_model(dims, ranks, rng);
    const auto fast = multilinear_transform(m.core, m.factors);
    const auto slow = brute_force_transform(m.core, m.factors);
    EXPECT_LE((fast.data() - slow.data()).norm(), 1e-13 * slow.norm());
  }
}

TEST(MultilinearTransform, RejectsShapeMismatch) {
  const DenseTensor core({2, 2});
  EXPECT_THROW(multilinear_transform(core, {Mat::Ones(3, 2), Mat::Ones(3, 3)}), PreconditionError);
}

TEST(Unfold, OrderTwoAlongSecondModeIsTheMatrix) {
  Rng rng(4);
  const Mat m = gaussian_matrix(3, 5, rng);
  const DenseTensor t({3, 5}, Eigen::Map<const Vec>(m.data(), m.size()));
  EXPECT_EQ(unfold(t, ModeSet{1}), m);
}

TEST(Unfold, EnumeratedModeThreeColumns) {
  const Mat m = unfold(enumerated_222(), ModeSet{2});
  ASSERT_EQ(m.rows(), 4);
  ASSERT_EQ(m.cols(), 2);
  for (Index k = 0; k < 2; ++k)
    for (Index r = 0; r < 4; ++r) EXPECT_EQ(m(r, k), static_cast<double>(r + 4 * k));
}

TEST(Unfold, RejectsEmptyOrFullAxes) {
  const auto t = enumerated_222();
  EXPECT_THROW(unfold(t, ModeSet{}), PreconditionError);
  EXPECT_THROW(unfold(t, ModeSet{0, 1, 2}), PreconditionError);
  EXPECT_THROW(ModeSet({2, 1}), PreconditionError);
}

TEST(Fold, RoundTripsBitExactly) {
  Rng rng(5);
  const DenseTensor t({3, 4, 2, 3}, gaussian_vector(72, rng));
  for (const ModeSet& axes : {ModeSet{0}, ModeSet{1, 3}, ModeSet{0, 2, 3}}) {
    const Mat m = unfold(t, axes);
    EXPECT_EQ(fold(m, axes, t.dims()), t);
    EXPECT_EQ(unfold(fold(m, axes, t.dims()), axes), m);
  }
  const auto e = enumerated_222();
  EXPECT_EQ(fold(unfold(e, ModeSet{2}), ModeSet{2}, e.dims()), e);
}

TEST(Fold, OneByOneGivesScalarTensor) {
  const Mat m = Mat::Constant(1, 1, 7.0);
  const auto t = fold(m, ModeSet{1}, {1, 1});
  EXPECT_EQ(t.size(), 1);
  EXPECT_EQ(t.data()(0), 7.0);
  EXPECT_THROW(fold(Mat::Ones(2, 2), ModeSet{1}, {3, 1}), PreconditionError);
}

TEST(Unfold, ModeThreeFactorsThroughKronecker) {
  Rng rng(6);
  const auto m = random_model({4, 3, 5}, {2, 2, 3}, rng);
  const auto t = multilinear_transform(m.core, m.factors);
  const Mat lhs = unfold(t, ModeSet{2});
  const Mat rhs = kron(m.factors[0], m.factors[1]) * unfold(m.core, ModeSet{2}) * m.factors[2].transpose();
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * t.norm());
}

TEST(Unfold, EveryModeSetFactorsThroughKronecker) {
  Rng rng(7);
  const auto m = random_model({3, 2, 4, 3}, {2, 2, 3, 2}, rng);
  const auto t = multilinear_transform(m.core, m.factors);
  for (int mask = 1; mask < 15; ++mask) {
    std::vector<int> in, out;
    for (int k = 0; k < 4; ++k) (mask & (1 << k) ? in : out).push_back(k);
    std::vector<Mat> left, right;
    for (int k : out) left.push_back(m.factors[static_cast<std::size_t>(k)]);
    for (int k : in) right.push_back(m.factors[static_cast<std::size_t>(k)]);
    const ModeSet axes(in);
    const Mat rhs = kron(left) * unfold(m.core, axes) * kron(right).transpose();
    EXPECT_LE((unfold(t, axes) - rhs).norm(), 1e-12 * t.norm()) << "mask " << mask;
  }
}

TEST(Slice, ModeThreeIsDefinition) {
  const auto t = enumerated_222();
  for (Index k = 0; k < 2; ++k) {
    const Mat s = mode_slice(t, 2, k);
    for (Index j = 0; j < 2; ++j)
      for (Index i = 0; i < 2; ++i) EXPECT_EQ(s(i, j), t({i, j, k}));
  }
}

TEST(Slice, RankOneTensorSlice) {
  Rng rng(8);
  const Vec u = gaussian_vector(3, rng), v = gaussian_vector(4, rng), w = gaussian_vector(2, rng);
  DenseTensor core({1, 1, 1});
  core.data()(0) = 1.5;
  const auto t = multilinear_transform(core, {Mat(u), Mat(v), Mat(w)});
  const Mat expect = 1.5 * w(1) * u * v.transpose();
  EXPECT_LE((mode_slice(t, 2, 1) - expect).norm(), 1e-14);
}

TEST(Slice, OrderThreeSliceProperty) {
  Rng rng(9);
  const auto m = random_model({5, 4, 6}, {3, 3, 2}, rng);
  const auto t = multilinear_transform(m.core, m.factors);
  for (Index j = 0; j < 6; ++j) {
    Mat s = Mat::Zero(3, 3);
    for (Index k = 0; k < 2; ++k) s += m.factors[2](j, k) * mode_slice(m.core, 2, k);
    const Mat expect = m.factors[0] * s * m.factors[1].transpose();
    EXPECT_LE((mode_slice(t, 2, j) - expect).norm(), 1e-12 * t.norm());
  }
}

TEST(Slice, OrderFourOneTwoSliceProperty) {
  Rng rng(10);
  const auto m = random_model({4, 5, 3, 3}, {2, 3, 2, 2}, rng);
  const auto t = multilinear_transform(m.core, m.factors);
  for (Index k3 = 0; k3 < 3; ++k3)
    for (Index k4 = 0; k4 < 3; ++k4) {
      Mat s = Mat::Zero(2, 3);
      for (Index a4 = 0; a4 < 2; ++a4)
        for (Index a3 = 0; a3 < 2; ++a3)
          s += m.factors[2](k3, a3) * m.factors[3](k4, a4) *
               slice(m.core, SliceSpec{ModeSet{2, 3}, {a3, a4}, ModeSet{0}, ModeSet{1}});
      const Mat got = slice(t, SliceSpec{ModeSet{2, 3}, {k3, k4}, ModeSet{0}, ModeSet{1}});
      EXPECT_LE((got - m.factors[0] * s * m.factors[1].transpose()).norm(), 1e-12 * t.norm());
    }
}

TEST(Slice, RejectsBadSpecs) {
  const auto t = enumerated_222();
  EXPECT_THROW(slice(t, SliceSpec{ModeSet{2}, {2}, ModeSet{0}, ModeSet{1}}), PreconditionError);
  EXPECT_THROW(slice(t, SliceSpec{ModeSet{2}, {0}, ModeSet{0}, ModeSet{0}}), PreconditionError);
  EXPECT_THROW(slice(t, SliceSpec{ModeSet{2}, {0}, ModeSet{0}, ModeSet{}}), PreconditionError);
}

TEST(SliceCombination, UnitWeightsPickASlice) {
  Rng rng(11);
  const DenseTensor t({3, 4, 5}, gaussian_vector(60, rng));
  for (int mode = 0; mode < 3; ++mode)
    for (Index k = 0; k < t.dim(mode); ++k) {
      Vec w = Vec::Zero(t.dim(mode));
      w(k) = 1.0;
      EXPECT_EQ(slice_combination(t, mode, w), mode_slice(t, mode, k));
    }
}

TEST(SliceCombination, OnesOverTwoSlicesIsTheSum) {
  Rng rng(12);
  const DenseTensor t({3, 4, 2}, gaussian_vector(24, rng));
  const Mat s = slice_combination(t, 2, Vec(Vec::Ones(2)));
  EXPECT_LE((s - mode_slice(t, 2, 0) - mode_slice(t, 2, 1)).norm(), 1e-15);
  EXPECT_THROW(slice_combination(t, 2, Vec(Vec::Ones(3))), PreconditionError);
}

TEST(SliceCombination, FixedSetWeightsFollowMixedRadix) {
  Rng rng(13);
  const DenseTensor t({2, 3, 2, 3}, gaussian_vector(36, rng));
  Vec w = Vec::Zero(6);
  w(1 + 2 * 2) = 1.0;  // mode-2 index 1, mode-3 index 2
  const Mat s = slice_combination(t, ModeSet{2, 3}, ModeSet{0}, ModeSet{1}, w);
  EXPECT_EQ(s, slice(t, SliceSpec{ModeSet{2, 3}, {1, 2}, ModeSet{0}, ModeSet{1}}));
}
