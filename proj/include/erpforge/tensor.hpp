#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "erpforge/errors.hpp"

namespace erpforge {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  return os.str();
}

// Dense row-major N-d array (up to 5 axes in practice). Layout conventions
// per consumer: signal code uses (channels, time[, depth]); the network adds
// a leading batch axis and a trailing feature axis.
template <typename Real>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    for (int d : shape_) {
      if (d <= 0) throw ShapeMismatch("tensor dimension must be positive, got " + shape_str(shape_));
    }
    data_.assign(static_cast<std::size_t>(shape_numel(shape_)), Real(0));
  }

  Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_))
      throw ShapeMismatch("value count does not match shape " + shape_str(shape_));
  }

  static Tensor full(Shape shape, Real v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  const Shape& shape() const { return shape_; }
  int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::vector<Real>& values() { return data_; }
  const std::vector<Real>& values() const { return data_; }

  Real& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  Real operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  template <typename... Ix>
  Real& operator()(Ix... ix) {
    return data_[flat_index(ix...)];
  }
  template <typename... Ix>
  Real operator()(Ix... ix) const {
    return data_[flat_index(ix...)];
  }

  // Reinterprets the buffer with a new shape of identical element count.
  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != size())
      throw ShapeMismatch("reshape " + shape_str(shape_) + " -> " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> t;
    std::vector<Other> vals(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) vals[i] = static_cast<Other>(data_[i]);
    return Tensor<Other>(shape_, std::move(vals));
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  template <typename... Ix>
  std::size_t flat_index(Ix... ix) const {
    const std::array<std::int64_t, sizeof...(Ix)> idx{static_cast<std::int64_t>(ix)...};
    std::int64_t flat = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) flat = flat * shape_[a] + idx[a];
    return static_cast<std::size_t>(flat);
  }

  Shape shape_;
  std::vector<Real> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace erpforge
