#pragma once

#include <cstdint>
#include <random>

#include "ntd/tensor.hpp"

namespace ntd {

using Rng = std::mt19937_64;

// Singular values above max(m,n) * eps * sigma_max * factor count toward the rank.
Index numerical_rank(const Mat& m, double factor = 1e3);

// Moore-Penrose pseudoinverse with the same cutoff as numerical_rank.
Mat pinv(const Mat& m, double factor = 1e3);

// r orthonormal columns spanning the leading r-dimensional column space of x.
// Throws RankDeficient when the numerical rank is below r.
Mat orthonormal_range(const Mat& x, Index r, double factor = 1e3);

Vec gaussian_vector(Index n, Rng& rng);
Mat gaussian_matrix(Index rows, Index cols, Rng& rng);

// Independent stream for a sub-task, so that adding draws to one stage
// does not shift another stage's randomness.
Rng substream(std::uint64_t seed, std::uint64_t tag);

// splitmix64 of (seed, tag); used to hand derived seeds to nested solvers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// 2-norm condition number; +inf for singular input.
double condition_number(const Mat& m);

}  // namespace ntd
