// Double-description enumeration of the extreme rays of {y : H y >= 0}.

#include <Eigen/QR>

#include <algorithm>
#include <cstdint>
#include <string>

#include "ntd/cone.hpp"

namespace ntd {

namespace {

constexpr double kZero = 1e-10;

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : w_((n + 63) / 64, 0) {}
  void set(std::size_t i) { w_[i / 64] |= (std::uint64_t{1} << (i % 64)); }
  Bits operator&(const Bits& o) const {
    Bits r(0);
    r.w_.resize(w_.size());
    for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] = w_[k] & o.w_[k];
    return r;
  }
  bool subset_of(const Bits& o) const {
    for (std::size_t k = 0; k < w_.size(); ++k)
      if (w_[k] & ~o.w_[k]) return false;
    return true;
  }
  int count() const {
    int c = 0;
    for (auto x : w_) c += __builtin_popcountll(x);
    return c;
  }

 private:
  std::vector<std::uint64_t> w_;
};

struct Ray {
  Vec y;
  Bits zeros;
};

// Unit-norm nonzero rows with duplicates removed.
Mat normalized_rows(const Mat& h) {
  std::vector<Vec> kept;
  for (Index i = 0; i < h.rows(); ++i) {
    const double nrm = h.row(i).norm();
    if (nrm == 0.0) continue;
    Vec a = h.row(i).transpose() / nrm;
    bool dup = false;
    for (const auto& b : kept)
      if ((a - b).cwiseAbs().maxCoeff() <= 1e-12) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(std::move(a));
  }
  Mat out(static_cast<Index>(kept.size()), h.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) out.row(static_cast<Index>(i)) = kept[i].transpose();
  return out;
}

}  // namespace

DualCone enumerate_dual_vertices(const Mat& h, double tol, EnumerationCap cap) {
  const Index r = h.cols();
  if (r < 2) throw PreconditionError("dual enumeration needs r >= 2");
  if (r > cap.max_rank || h.rows() > cap.max_rows)
    throw CapExceeded("dual enumeration cap exceeded (r=" + std::to_string(r) +
                      ", n=" + std::to_string(h.rows()) + ")");

  DualCone out;
  const Mat a = normalized_rows(h);
  const Index n = a.rows();
  if (n < r || numerical_rank(a) < r) {
    out.pointed = false;
    out.unbounded = true;
    return out;
  }

  // Start from r independent constraints: their cone is simplicial.
  Eigen::ColPivHouseholderQR<Mat> qr(a.transpose());
  std::vector<Index> order;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Index k = 0; k < r; ++k) {
    const Index row = qr.colsPermutation().indices()(k);
    order.push_back(row);
    used[static_cast<std::size_t>(row)] = 1;
  }
  Mat a0(r, r);
  for (Index k = 0; k < r; ++k) a0.row(k) = a.row(order[static_cast<std::size_t>(k)]);
  const Mat inv = a0.inverse();

  std::vector<Ray> rays;
  for (Index k = 0; k < r; ++k) {
    Ray ray{inv.col(k).normalized(), Bits(static_cast<std::size_t>(n))};
    for (Index j = 0; j < r; ++j)
      if (j != k) ray.zeros.set(static_cast<std::size_t>(order[static_cast<std::size_t>(j)]));
    rays.push_back(std::move(ray));
  }

  for (Index i = 0; i < n; ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    std::vector<double> val(rays.size());
    std::vector<std::size_t> pos, neg, zero;
    for (std::size_t k = 0; k < rays.size(); ++k) {
      val[k] = a.row(i).dot(rays[k].y);
      if (val[k] > kZero)
        pos.push_back(k);
      else if (val[k] < -kZero)
        neg.push_back(k);
      else
        zero.push_back(k);
    }
    std::vector<Ray> next;
    for (std::size_t p : pos) next.push_back(rays[p]);
    for (std::size_t z : zero) {
      next.push_back(rays[z]);
      next.back().zeros.set(static_cast<std::size_t>(i));
    }
    for (std::size_t p : pos) {
      for (std::size_t q : neg) {
        const Bits common = rays[p].zeros & rays[q].zeros;
        if (common.count() < r - 2) continue;
        bool adjacent = true;
        for (std::size_t k = 0; k < rays.size() && adjacent; ++k)
          if (k != p && k != q && common.subset_of(rays[k].zeros)) adjacent = false;
        if (!adjacent) continue;
        Ray nr{(val[p] * rays[q].y - val[q] * rays[p].y).normalized(), common};
        nr.zeros.set(static_cast<std::size_t>(i));
        next.push_back(std::move(nr));
      }
    }
    rays = std::move(next);
  }

  for (const auto& ray : rays) {
    out.rays.push_back(ray.y);
    const double s = ray.y.sum();
    if (s <= kZero) {
      out.unbounded = true;
      continue;
    }
    Vec v = ray.y / s;
    bool dup = false;
    for (const auto& w : out.vertices)
      if ((v - w).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.vertices.push_back(std::move(v));
  }
  return out;
}

}  // namespace ntd
