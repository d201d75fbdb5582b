#pragma once

// Dense order-d tensors, stored first-index-fastest.
//
// All indices are 0-based in code. A tuple (i_1..i_d) lives at offset
// i_1 + n_1 i_2 + n_1 n_2 i_3 + ...; grouped modes (unfoldings, slices,
// Kronecker products) use the same rule restricted to the group, modes
// ascending, first listed fastest.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ntd/errors.hpp"

namespace ntd {

using Index = Eigen::Index;
using Dims = std::vector<Index>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Index dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

template <typename Scalar>
class Tensor {
 public:
  using Storage = VectorX<Scalar>;

  Tensor() : dims_{1}, data_(Storage::Zero(1)) {}

  explicit Tensor(Dims dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_ = Storage::Zero(dims_product(dims_));
  }

  Tensor(Dims dims, Storage data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != dims_product(dims_))
      throw PreconditionError("tensor data length does not match dims");
  }

  static Tensor Zero(Dims dims) { return Tensor(std::move(dims)); }

  const Dims& dims() const { return dims_; }
  Index dim(int k) const { return dims_.at(static_cast<std::size_t>(k)); }
  int order() const { return static_cast<int>(dims_.size()); }
  Index size() const { return data_.size(); }

  Storage& data() { return data_; }
  const Storage& data() const { return data_; }

  Index offset(const std::vector<Index>& idx) const {
    if (idx.size() != dims_.size()) throw PreconditionError("index tuple has wrong length");
    Index off = 0, stride = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= dims_[k]) throw PreconditionError("tensor index out of range");
      off += stride * idx[k];
      stride *= dims_[k];
    }
    return off;
  }

  Scalar& operator()(const std::vector<Index>& idx) { return data_[offset(idx)]; }
  Scalar operator()(const std::vector<Index>& idx) const { return data_[offset(idx)]; }
  Scalar& operator()(std::initializer_list<Index> idx) { return (*this)(std::vector<Index>(idx)); }
  Scalar operator()(std::initializer_list<Index> idx) const {
    return (*this)(std::vector<Index>(idx));
  }

  Scalar norm() const { return data_.norm(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(dims_, data_.template cast<Other>());
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  static void check_dims(const Dims& dims) {
    if (dims.empty()) throw PreconditionError("tensor order must be at least 1");
    for (Index n : dims)
      if (n < 1) throw PreconditionError("tensor dimensions must be positive");
  }

  Dims dims_;
  Storage data_;
};

using DenseTensor = Tensor<double>;

// Strictly increasing list of 0-based modes.
class ModeSet {
 public:
  ModeSet() = default;
  ModeSet(std::initializer_list<int> modes) : ModeSet(std::vector<int>(modes)) {}
  explicit ModeSet(std::vector<int> modes) : modes_(std::move(modes)) {
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      if (modes_[k] < 0) throw PreconditionError("negative mode index");
      if (k > 0 && modes_[k] <= modes_[k - 1])
        throw PreconditionError("mode set must be strictly increasing");
    }
  }

  // Every mode of an order-d tensor not in this set.
  ModeSet complement(int order) const {
    std::vector<int> rest;
    for (int k = 0; k < order; ++k)
      if (!contains(k)) rest.push_back(k);
    return ModeSet(std::move(rest));
  }

  bool contains(int mode) const { return std::binary_search(modes_.begin(), modes_.end(), mode); }
  bool empty() const { return modes_.empty(); }
  std::size_t size() const { return modes_.size(); }
  int operator[](std::size_t k) const { return modes_[k]; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }
  const std::vector<int>& modes() const { return modes_; }

  friend bool operator==(const ModeSet&, const ModeSet&) = default;

 private:
  std::vector<int> modes_;
};

inline Index group_size(const Dims& dims, const ModeSet& modes) {
  Index n = 1;
  for (int m : modes) n *= dims.at(static_cast<std::size_t>(m));
  return n;
}

// Fix the modes in `fixed` at `index` and read the rest as a matrix with
// rows over `rows` and columns over `cols`. The three sets partition [d].
struct SliceSpec {
  ModeSet fixed;
  std::vector<Index> index;
  ModeSet rows;
  ModeSet cols;
};

namespace detail {

inline std::vector<Index> tensor_strides(const Dims& dims) {
  std::vector<Index> s(dims.size());
  Index acc = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    s[k] = acc;
    acc *= dims[k];
  }
  return s;
}

// Tensor offset contributed by each mixed-radix index over `modes`.
inline std::vector<Index> group_offsets(const Dims& dims, const ModeSet& modes) {
  const auto strides = tensor_strides(dims);
  std::vector<Index> offs{0};
  for (int m : modes) {
    const auto mm = static_cast<std::size_t>(m);
    std::vector<Index> next;
    next.reserve(offs.size() * static_cast<std::size_t>(dims[mm]));
    for (Index i = 0; i < dims[mm]; ++i)
      for (Index o : offs) next.push_back(o + i * strides[mm]);
    offs = std::move(next);
  }
  return offs;
}

inline void check_modes(const ModeSet& s, int order) {
  for (int m : s)
    if (m >= order) throw PreconditionError("mode index exceeds tensor order");
}

inline void check_partition(int order, std::initializer_list<const ModeSet*> parts) {
  std::vector<int> seen(static_cast<std::size_t>(order), 0);
  for (const ModeSet* p : parts) {
    if (p->empty()) throw PreconditionError("partition blocks must be non-empty");
    check_modes(*p, order);
    for (int m : *p) ++seen[static_cast<std::size_t>(m)];
  }
  for (int c : seen)
    if (c != 1) throw PreconditionError("mode sets do not partition the tensor modes");
}

}  // namespace detail

// Rows: modes outside `axes`; columns: modes in `axes`.
template <typename Scalar>
MatrixX<Scalar> unfold(const Tensor<Scalar>& t, const ModeSet& axes) {
  detail::check_modes(axes, t.order());
  if (axes.empty() || static_cast<int>(axes.size()) >= t.order())
    throw PreconditionError("unfolding axes must be a proper non-empty subset of the modes");
  const auto roff = detail::group_offsets(t.dims(), axes.complement(t.order()));
  const auto coff = detail::group_offsets(t.dims(), axes);
  MatrixX<Scalar> m(static_cast<Index>(roff.size()), static_cast<Index>(coff.size()));
  const auto& d = t.data();
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      m(r, c) = d[roff[static_cast<std::size_t>(r)] + coff[static_cast<std::size_t>(c)]];
  return m;
}

template <typename Derived>
Tensor<typename Derived::Scalar> fold(const Eigen::MatrixBase<Derived>& m, const ModeSet& axes,
                                      const Dims& dims) {
  using Scalar = typename Derived::Scalar;
  Tensor<Scalar> t(dims);
  detail::check_modes(axes, t.order());
  if (axes.empty() || static_cast<int>(axes.size()) >= t.order())
    throw PreconditionError("folding axes must be a proper non-empty subset of the modes");
  const auto roff = detail::group_offsets(dims, axes.complement(t.order()));
  const auto coff = detail::group_offsets(dims, axes);
  if (m.rows() != static_cast<Index>(roff.size()) || m.cols() != static_cast<Index>(coff.size()))
    throw PreconditionError("matrix shape inconsistent with dims and axes");
  auto& d = t.data();
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      d[roff[static_cast<std::size_t>(r)] + coff[static_cast<std::size_t>(c)]] = m(r, c);
  return t;
}

// Mode-k product: replaces dimension n_k by a.rows(), contracting with a's columns.
template <typename Scalar, typename Derived>
Tensor<Scalar> mode_product(const Tensor<Scalar>& t, int mode, const Eigen::MatrixBase<Derived>& a) {
  if (mode < 0 || mode >= t.order()) throw PreconditionError("mode out of range");
  if (a.cols() != t.dim(mode)) throw PreconditionError("factor columns do not match tensor dimension");
  Dims out = t.dims();
  out[static_cast<std::size_t>(mode)] = a.rows();
  if (t.order() == 1) return Tensor<Scalar>(out, a * t.data());
  const ModeSet axis{mode};
  const MatrixX<Scalar> m = unfold(t, axis) * a.transpose();
  return fold(m, axis, out);
}

// (U_1, ..., U_d).core
template <typename Scalar>
Tensor<Scalar> multilinear_transform(const Tensor<Scalar>& core,
                                     const std::vector<MatrixX<Scalar>>& factors) {
  if (static_cast<int>(factors.size()) != core.order())
    throw PreconditionError("need one factor per core mode");
  for (int k = 0; k < core.order(); ++k)
    if (factors[static_cast<std::size_t>(k)].cols() != core.dim(k))
      throw PreconditionError("factor " + std::to_string(k) + " columns do not match core dimension");
  Tensor<Scalar> t = core;
  for (int k = 0; k < core.order(); ++k) t = mode_product(t, k, factors[static_cast<std::size_t>(k)]);
  return t;
}

template <typename Scalar>
MatrixX<Scalar> slice(const Tensor<Scalar>& t, const SliceSpec& spec) {
  detail::check_partition(t.order(), {&spec.fixed, &spec.rows, &spec.cols});
  if (spec.index.size() != spec.fixed.size()) throw PreconditionError("one fixed index per fixed mode");
  const auto strides = detail::tensor_strides(t.dims());
  Index base = 0;
  for (std::size_t k = 0; k < spec.fixed.size(); ++k) {
    const auto m = static_cast<std::size_t>(spec.fixed[k]);
    if (spec.index[k] < 0 || spec.index[k] >= t.dims()[m])
      throw PreconditionError("fixed slice index out of range");
    base += spec.index[k] * strides[m];
  }
  const auto roff = detail::group_offsets(t.dims(), spec.rows);
  const auto coff = detail::group_offsets(t.dims(), spec.cols);
  MatrixX<Scalar> s(static_cast<Index>(roff.size()), static_cast<Index>(coff.size()));
  for (Index c = 0; c < s.cols(); ++c)
    for (Index r = 0; r < s.rows(); ++r)
      s(r, c) = t.data()[base + roff[static_cast<std::size_t>(r)] + coff[static_cast<std::size_t>(c)]];
  return s;
}

// Order-3 shorthand: fix `mode` at `index`; rows/cols are the remaining modes ascending.
inline SliceSpec mode_slice_spec(int mode, Index index) {
  std::vector<int> rest;
  for (int k = 0; k < 3; ++k)
    if (k != mode) rest.push_back(k);
  return SliceSpec{ModeSet{mode}, {index}, ModeSet{rest[0]}, ModeSet{rest[1]}};
}

template <typename Scalar>
MatrixX<Scalar> mode_slice(const Tensor<Scalar>& t, int mode, Index index) {
  if (t.order() != 3) throw PreconditionError("single-mode slices are matrices only for order 3");
  return slice(t, mode_slice_spec(mode, index));
}

// Sum over every tuple of the fixed modes (mixed radix, first fixed mode
// fastest) of weights[tuple] times that slice.
template <typename Scalar>
MatrixX<Scalar> slice_combination(const Tensor<Scalar>& t, const ModeSet& fixed, const ModeSet& rows,
                                  const ModeSet& cols, const VectorX<Scalar>& weights) {
  detail::check_partition(t.order(), {&fixed, &rows, &cols});
  const auto foff = detail::group_offsets(t.dims(), fixed);
  if (weights.size() != static_cast<Index>(foff.size()))
    throw PreconditionError("weight count must equal the number of slices");
  const auto roff = detail::group_offsets(t.dims(), rows);
  const auto coff = detail::group_offsets(t.dims(), cols);
  MatrixX<Scalar> s = MatrixX<Scalar>::Zero(static_cast<Index>(roff.size()), static_cast<Index>(coff.size()));
  for (std::size_t f = 0; f < foff.size(); ++f) {
    const Scalar w = weights[static_cast<Index>(f)];
    if (w == Scalar(0)) continue;
    for (Index c = 0; c < s.cols(); ++c)
      for (Index r = 0; r < s.rows(); ++r)
        s(r, c) += w * t.data()[foff[f] + roff[static_cast<std::size_t>(r)] + coff[static_cast<std::size_t>(c)]];
  }
  return s;
}

template <typename Scalar>
MatrixX<Scalar> slice_combination(const Tensor<Scalar>& t, int mode, const VectorX<Scalar>& weights) {
  if (t.order() != 3) throw PreconditionError("single-mode slice combinations need an order-3 tensor");
  const SliceSpec s = mode_slice_spec(mode, 0);
  return slice_combination(t, s.fixed, s.rows, s.cols, weights);
}

// Mixed-radix decode of a flat group index into per-mode indices.
inline std::vector<Index> unravel(Index flat, const std::vector<Index>& radices) {
  std::vector<Index> out(radices.size());
  for (std::size_t k = 0; k < radices.size(); ++k) {
    out[k] = flat % radices[k];
    flat /= radices[k];
  }
  return out;
}

inline Index ravel(const std::vector<Index>& idx, const std::vector<Index>& radices) {
  Index flat = 0, stride = 1;
  for (std::size_t k = 0; k < radices.size(); ++k) {
    flat += idx[k] * stride;
    stride *= radices[k];
  }
  return flat;
}

}  // namespace ntd
