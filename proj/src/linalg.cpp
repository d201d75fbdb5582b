#include "ntd/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <string>

namespace ntd {

namespace {

double rank_cutoff(const Mat& m, double smax, double factor) {
  return static_cast<double>(std::max(m.rows(), m.cols())) * std::numeric_limits<double>::epsilon() *
         smax * factor;
}

}  // namespace

Index numerical_rank(const Mat& m, double factor) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rank_cutoff(m, s(0), factor);
  return static_cast<Index>((s.array() > cut).count());
}

Mat pinv(const Mat& m, double factor) {
  Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  Mat out = Mat::Zero(m.cols(), m.rows());
  if (s.size() == 0 || s(0) == 0.0) return out;
  const double cut = rank_cutoff(m, s(0), factor);
  for (Index k = 0; k < s.size(); ++k)
    if (s(k) > cut) out += svd.matrixV().col(k) * (svd.matrixU().col(k).transpose() / s(k));
  return out;
}

Mat orthonormal_range(const Mat& x, Index r, double factor) {
  if (r < 1) throw PreconditionError("range dimension must be positive");
  if (r > std::min(x.rows(), x.cols())) throw RankDeficient("requested range exceeds matrix size");
  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  const double cut = s(0) > 0 ? rank_cutoff(x, s(0), factor) : 0.0;
  const Index rank = s(0) > 0 ? static_cast<Index>((s.array() > cut).count()) : 0;
  if (rank < r)
    throw RankDeficient("numerical rank " + std::to_string(rank) + " below target " + std::to_string(r));
  return svd.matrixU().leftCols(r);
}

Vec gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

Mat gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

Rng substream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

}  // namespace ntd
