#include "ntd/model.hpp"

namespace ntd {

DenseTensor reconstruct(const NtdModel& m) { return multilinear_transform(m.core, m.factors); }

NtdModel column_normalized(const NtdModel& m) {
  NtdModel out = m;
  for (std::size_t k = 0; k < out.factors.size(); ++k) {
    Mat& u = out.factors[k];
    Vec s = u.colwise().sum().transpose();
    for (Index c = 0; c < s.size(); ++c)
      if (s(c) == 0.0) s(c) = 1.0;
    u = u * s.cwiseInverse().asDiagonal();
    out.core = mode_product(out.core, static_cast<int>(k), Mat(s.asDiagonal()));
  }
  return out;
}

double relative_residual(const NtdModel& m, const DenseTensor& t) {
  const DenseTensor r = reconstruct(m);
  if (r.dims() != t.dims()) throw PreconditionError("model and tensor dimensions differ");
  const double nt = t.norm();
  const double diff = (r.data() - t.data()).norm();
  return nt > 0 ? diff / nt : diff;
}

}  // namespace ntd
