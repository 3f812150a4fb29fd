#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vms/error.hpp"

namespace vms {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Row-major flat offset of `coords` in `shape`. Every module indexes through this.
std::size_t flat_index(const Shape& shape, std::span<const std::size_t> coords);
// Inverse of flat_index.
std::vector<std::size_t> unravel_index(const Shape& shape, std::size_t flat);

/// Dense row-major n-dimensional buffer. `double` is the correctness dtype;
/// `float` exists for the benchmark path only.
template <class T>
class BasicArray {
 public:
  using value_type = T;

  BasicArray() : shape_{0} {}
  explicit BasicArray(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), T{0}) {}
  BasicArray(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
      throw ShapeMismatch("array data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_str(shape_));
    }
  }

  static BasicArray filled(Shape shape, T value) {
    BasicArray a(std::move(shape));
    std::fill(a.data_.begin(), a.data_.end(), value);
    return a;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Contiguous view of row i of the leading axis.
  std::span<const T> row(std::size_t i) const {
    const std::size_t stride = shape_.empty() || shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    return std::span<const T>(data_).subspan(i * stride, stride);
  }
  std::span<T> row(std::size_t i) {
    const std::size_t stride = shape_.empty() || shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    return std::span<T>(data_).subspan(i * stride, stride);
  }

  BasicArray reshaped(Shape shape) const { return BasicArray(std::move(shape), data_); }

  template <class U>
  BasicArray<U> cast() const {
    return BasicArray<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicArray& a, const BasicArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Array = BasicArray<double>;
using ArrayF = BasicArray<float>;

// ---- shape checks -------------------------------------------------------

void require_rank(const Shape& shape, std::size_t rank, const char* what);
void require_shape(const Shape& got, const Shape& want, const char* what);

// Throws NonFinite naming `what` if any element is NaN/Inf.
template <class T>
void check_finite(const BasicArray<T>& a, const char* what);

// ---- pure operations ----------------------------------------------------

// Standard matrix product, accumulated in double regardless of T.
template <class T>
BasicArray<T> matmul(const BasicArray<T>& a, const BasicArray<T>& b);
// x[M,K] * w[K,N] + bias[N] (one row of bias added to every row).
template <class T>
BasicArray<T> linear(const BasicArray<T>& x, const BasicArray<T>& w, const BasicArray<T>& bias);
template <class T>
BasicArray<T> transpose(const BasicArray<T>& a);

// Reverses the leading axis of a rank-2 array. Bit-exact.
template <class T>
BasicArray<T> reverse_seq(const BasicArray<T>& x);
// Columns [begin, end) of a rank-2 array. Bit-exact.
template <class T>
BasicArray<T> slice_cols(const BasicArray<T>& x, std::size_t begin, std::size_t end);
// Rows [begin, end) of an array of any rank >= 1. Bit-exact.
template <class T>
BasicArray<T> slice_rows(const BasicArray<T>& x, std::size_t begin, std::size_t end);
// Concatenate rank-2 arrays along columns / rows. Bit-exact.
template <class T>
BasicArray<T> concat_cols(const std::vector<BasicArray<T>>& parts);
template <class T>
BasicArray<T> concat_rows(const std::vector<BasicArray<T>>& parts);

Array add(const Array& a, const Array& b);
Array sub(const Array& a, const Array& b);
Array mul(const Array& a, const Array& b);
Array scale(const Array& a, double s);
Array identity(std::size_t n);

double max_abs_diff(const Array& a, const Array& b);
// Normwise relative error: max|a-b| / max(max|b|, floor).
double max_rel_diff(const Array& a, const Array& b, double floor = 1e-300);
double sum_squares(const Array& a);

}  // namespace vms
