#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include "ntd/kron.hpp"
#include "test_util.hpp"

using namespace ntd;
using ntd::testing::nearest_column_error;
using ntd::testing::permute_columns;
using ntd::testing::random_permutation;
using ntd::testing::random_stochastic;

TEST(Kron, IdentityTimesIdentity) { EXPECT_EQ(kron(Mat::Identity(2, 2), Mat::Identity(2, 2)), Mat::Identity(4, 4)); }

TEST(Kron, FirstFactorVariesFastest) {
  Vec a(2), b(2);
  a << 1, 2;
  b << 3, 4;
  Vec expect(4);
  expect << 3, 6, 4, 8;
  EXPECT_EQ(Vec(kron(a, b)), expect);

  const Vec e0 = Vec::Unit(2, 0), e1 = Vec::Unit(2, 1);
  EXPECT_EQ(Vec(kron(e0, e1)), Vec(Vec::Unit(4, 2)));
}

TEST(Kron, ColumnsAreVectorizedOuterProducts) {
  Rng rng(1);
  for (Index m = 1; m <= 3; ++m)
    for (Index n = 1; n <= 3; ++n) {
      const Mat a = gaussian_matrix(m, 2, rng), b = gaussian_matrix(n, 3, rng);
      const Mat k = kron(a, b);
      for (Index q = 0; q < 3; ++q)
        for (Index p = 0; p < 2; ++p) {
          const Mat outer = a.col(p) * b.col(q).transpose();
          EXPECT_EQ(k.col(p + 2 * q), Eigen::Map<const Vec>(outer.data(), outer.size()));
        }
    }
}

TEST(Kron, EqualsEigenKroneckerWithSwappedArguments) {
  Rng rng(2);
  const Mat a = gaussian_matrix(4, 3, rng), b = gaussian_matrix(2, 5, rng);
  const Mat ref = Eigen::kroneckerProduct(b, a);
  EXPECT_EQ(kron(a, b), ref);
}

TEST(Kron, RankIsMultiplicative) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = gaussian_matrix(5, 2, rng) * gaussian_matrix(2, 4, rng);
    const Mat b = gaussian_matrix(4, 3, rng);
    EXPECT_EQ(numerical_rank(kron(a, b)), numerical_rank(a) * numerical_rank(b));
  }
}

TEST(Kron, StochasticFactorsGiveStochasticProduct) {
  Rng rng(4);
  const std::vector<Mat> fs{random_stochastic(3, 2, rng), random_stochastic(4, 3, rng), random_stochastic(2, 2, rng)};
  const Mat k = kron(fs);
  EXPECT_LE((k.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
}

TEST(KronSplit, RoundTrip) {
  Rng rng(5);
  const Mat u1 = random_stochastic(6, 3, rng), u2 = random_stochastic(5, 2, rng);
  const auto s = kron_split(kron(u1, u2), {{6, 3}, {5, 2}});
  EXPECT_LE((s.u1 - u1).norm(), 1e-14);
  EXPECT_LE((s.u2 - u2).norm(), 1e-14);
  EXPECT_LE(s.residual, 1e-14);
}

TEST(KronSplit, SingleColumnOuterProduct) {
  Rng rng(6);
  const Mat u = random_stochastic(4, 1, rng), v = random_stochastic(3, 1, rng);
  const Mat outer = u * v.transpose();
  const Mat x = Eigen::Map<const Vec>(outer.data(), outer.size());
  const auto s = kron_split(x, {{4, 1}, {3, 1}});
  EXPECT_LE((s.u1 - u).norm(), 1e-15);
  EXPECT_LE((s.u2 - v).norm(), 1e-15);
}

TEST(KronSplit, PerturbedInputIsRejected) {
  Rng rng(7);
  const Mat x = kron(random_stochastic(4, 2, rng), random_stochastic(3, 2, rng));
  const Mat noisy = x + 1e-6 * gaussian_matrix(x.rows(), x.cols(), rng);
  EXPECT_THROW(kron_split(noisy, {{4, 2}, {3, 2}}, 1e-9), NotAKroneckerProduct);
  Mat zero_col = x;
  zero_col.col(1).setZero();
  EXPECT_THROW(kron_split(zero_col, {{4, 2}, {3, 2}}), PreconditionError);
}

TEST(KronSplitPermuted, IdentityPermutationMatchesPlainSplit) {
  Rng rng(8);
  const Mat u1 = random_stochastic(4, 2, rng), u2 = random_stochastic(3, 3, rng);
  const auto s = kron_split_permuted(kron(u1, u2), {{4, 2}, {3, 3}});
  EXPECT_LE((s.u1 - u1).norm(), 1e-14);
  EXPECT_LE((s.u2 - u2).norm(), 1e-14);
  for (std::size_t q = 0; q < s.perm.size(); ++q) EXPECT_EQ(s.perm[q], static_cast<Index>(q));
}

TEST(KronSplitPermuted, RecoversFactorsUnderRandomPermutation) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat u1 = random_stochastic(6, 3, rng), u2 = random_stochastic(5, 2, rng);
    const Mat x = permute_columns(kron(u1, u2), random_permutation(6, rng));
    const auto s = kron_split_permuted(x, {{6, 3}, {5, 2}});
    EXPECT_LE(nearest_column_error(s.u1, u1), 1e-10);
    EXPECT_LE(nearest_column_error(s.u2, u2), 1e-10);
    EXPECT_LE((x * permutation_matrix(s.perm) - kron(s.u1, s.u2)).norm(), 1e-10);
  }
}

TEST(KronSplitPermuted, RepeatedLeftColumnIsAmbiguous) {
  Rng rng(10);
  Mat u1 = random_stochastic(4, 2, rng);
  u1.col(1) = u1.col(0);
  const Mat u2 = random_stochastic(3, 2, rng);
  EXPECT_THROW(kron_split_permuted(kron(u1, u2), {{4, 2}, {3, 2}}), NotPermutedKronecker);
}

TEST(KronSplitMulti, TwoFactorsReduceToPermutedSplit) {
  Rng rng(11);
  const Mat u1 = random_stochastic(4, 2, rng), u2 = random_stochastic(3, 2, rng);
  const Mat x = permute_columns(kron(u1, u2), random_permutation(4, rng));
  const auto a = kron_split_multi(x, {{4, 2}, {3, 2}});
  const auto b = kron_split_permuted(x, {{4, 2}, {3, 2}});
  EXPECT_EQ(a.perm, b.perm);
  EXPECT_EQ(a.factors[0], b.u1);
  EXPECT_EQ(a.factors[1], b.u2);
}

TEST(KronSplitMulti, ThreeFactorsUnderRandomPermutation) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<Mat> fs{random_stochastic(4, 2, rng), random_stochastic(3, 2, rng), random_stochastic(5, 2, rng)};
    const Mat x = permute_columns(kron(fs), random_permutation(8, rng));
    const auto s = kron_split_multi(x, {{4, 2}, {3, 2}, {5, 2}});
    ASSERT_EQ(s.factors.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(nearest_column_error(s.factors[k], fs[k]), 1e-10);
    EXPECT_LE((x * permutation_matrix(s.perm) - kron(s.factors)).norm(), 1e-10);
  }
}

TEST(KronSplitMulti, ShapeMismatchIsRejected) {
  EXPECT_THROW(kron_split_multi(Mat::Ones(12, 4), {{4, 2}, {4, 2}}), PreconditionError);
}

TEST(NearestKron, ExactProductHasZeroResidual) {
  Rng rng(13);
  const Mat u1 = random_stochastic(5, 2, rng), u2 = random_stochastic(4, 3, rng);
  const Mat x = kron(u1, u2);
  const auto nk = nearest_kron(x, {{5, 2}, {4, 3}});
  EXPECT_LE(nk.residual, 1e-12);
  EXPECT_LE((kron(nk.u1, nk.u2) - x).norm(), 1e-12);
  const auto st = nearest_kron(x, {{5, 2}, {4, 3}}, true);
  EXPECT_TRUE(st.heuristic);
  EXPECT_LE((st.u1 - u1).norm() + (st.u2 - u2).norm(), 1e-10);
}

TEST(NearestKron, NoisyProductResidualIsBoundedByNoise) {
  Rng rng(14);
  const double sigma = 1e-3;
  const Mat x = kron(random_stochastic(5, 2, rng), random_stochastic(4, 3, rng));
  const Mat noisy = x + sigma * gaussian_matrix(x.rows(), x.cols(), rng);
  const auto nk = nearest_kron(noisy, {{5, 2}, {4, 3}});
  EXPECT_LE(nk.residual, 2 * sigma * std::sqrt(static_cast<double>(x.size())));
  EXPECT_NEAR(nk.residual, (noisy - kron(nk.u1, nk.u2)).norm(), 1e-12);
  // The SVD answer is optimal: the clean factors cannot do better.
  EXPECT_LE(nk.residual, (noisy - x).norm() + 1e-12);
}

TEST(NearestKron, ZeroInputGivesZeroFactors) {
  const auto nk = nearest_kron(Mat::Zero(6, 4), {{3, 2}, {2, 2}});
  EXPECT_EQ(nk.u1, Mat::Zero(3, 2));
  EXPECT_EQ(nk.u2, Mat::Zero(2, 2));
  EXPECT_EQ(nk.residual, 0.0);
}
