#pragma once

#include <map>
#include <string>
#include <vector>

#include "ntd/tensor.hpp"

namespace ntd {

// Tucker model: tensor = (U_1, ..., U_d).core with nonnegative,
// column-stochastic U_i. The core may have any sign.
struct NtdModel {
  std::vector<Mat> factors;
  DenseTensor core;
  // Free-form numeric side information (slice indices, weights, objective values).
  std::map<std::string, std::vector<double>> diagnostics;

  std::vector<Index> ranks() const { return core.dims(); }
  Dims dims() const {
    Dims d;
    for (const auto& u : factors) d.push_back(u.rows());
    return d;
  }
};

DenseTensor reconstruct(const NtdModel& m);

// Rescales factor columns to unit sums and applies the inverse scaling to
// the core, which leaves the reconstruction unchanged.
NtdModel column_normalized(const NtdModel& m);

// Relative reconstruction residual ||t - reconstruct(m)|| / ||t||.
double relative_residual(const NtdModel& m, const DenseTensor& t);

}  // namespace ntd
