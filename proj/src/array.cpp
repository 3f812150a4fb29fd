#include "vms/array.hpp"

#include <cmath>
#include <sstream>

namespace vms {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t flat_index(const Shape& shape, std::span<const std::size_t> coords) {
  if (coords.size() != shape.size()) {
    throw ShapeMismatch("flat_index: " + std::to_string(coords.size()) + " coordinates for shape " +
                        shape_str(shape));
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (coords[i] >= shape[i]) {
      throw ShapeMismatch("flat_index: coordinate out of range for shape " + shape_str(shape));
    }
    flat = flat * shape[i] + coords[i];
  }
  return flat;
}

std::vector<std::size_t> unravel_index(const Shape& shape, std::size_t flat) {
  if (flat >= shape_numel(shape)) {
    throw ShapeMismatch("unravel_index: offset out of range for shape " + shape_str(shape));
  }
  std::vector<std::size_t> coords(shape.size());
  for (std::size_t i = shape.size(); i-- > 0;) {
    coords[i] = flat % shape[i];
    flat /= shape[i];
  }
  return coords;
}

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeMismatch(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                        shape_str(shape));
  }
}

void require_shape(const Shape& got, const Shape& want, const char* what) {
  if (got != want) {
    throw ShapeMismatch(std::string(what) + ": expected shape " + shape_str(want) + ", got " +
                        shape_str(got));
  }
}

template <class T>
void check_finite(const BasicArray<T>& a, const char* what) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i])) {
      throw NonFinite(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

template <class T>
BasicArray<T> matmul(const BasicArray<T>& a, const BasicArray<T>& b) {
  require_rank(a.shape(), 2, "matmul lhs");
  require_rank(b.shape(), 2, "matmul rhs");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  if (b.extent(0) != k) {
    throw ShapeMismatch("matmul: inner extents differ, " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));
  }
  BasicArray<T> out({m, n});
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      const T* brow = b.data().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += aip * static_cast<double>(brow[j]);
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) = static_cast<T>(acc[j]);
  }
  return out;
}

template <class T>
BasicArray<T> linear(const BasicArray<T>& x, const BasicArray<T>& w, const BasicArray<T>& bias) {
  require_rank(bias.shape(), 1, "linear bias");
  if (bias.extent(0) != w.extent(1)) {
    throw ShapeMismatch("linear: bias width " + std::to_string(bias.extent(0)) +
                        " does not match weight " + shape_str(w.shape()));
  }
  BasicArray<T> out = matmul(x, w);
  const std::size_t n = w.extent(1);
  for (std::size_t i = 0; i < out.extent(0); ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) += bias[j];
  }
  return out;
}

template <class T>
BasicArray<T> transpose(const BasicArray<T>& a) {
  require_rank(a.shape(), 2, "transpose");
  BasicArray<T> out({a.extent(1), a.extent(0)});
  for (std::size_t i = 0; i < a.extent(0); ++i)
    for (std::size_t j = 0; j < a.extent(1); ++j) out(j, i) = a(i, j);
  return out;
}

template <class T>
BasicArray<T> reverse_seq(const BasicArray<T>& x) {
  require_rank(x.shape(), 2, "reverse_seq");
  BasicArray<T> out(x.shape());
  const std::size_t m = x.extent(0);
  for (std::size_t t = 0; t < m; ++t) {
    auto src = x.row(m - 1 - t);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

template <class T>
BasicArray<T> slice_cols(const BasicArray<T>& x, std::size_t begin, std::size_t end) {
  require_rank(x.shape(), 2, "slice_cols");
  if (begin > end || end > x.extent(1)) {
    throw ShapeMismatch("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") outside " + shape_str(x.shape()));
  }
  BasicArray<T> out({x.extent(0), end - begin});
  for (std::size_t i = 0; i < x.extent(0); ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = x(i, j);
  return out;
}

template <class T>
BasicArray<T> slice_rows(const BasicArray<T>& x, std::size_t begin, std::size_t end) {
  if (x.rank() == 0 || begin > end || end > x.extent(0)) {
    throw ShapeMismatch("slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") outside " + shape_str(x.shape()));
  }
  Shape shape = x.shape();
  shape[0] = end - begin;
  const std::size_t stride = shape_numel(x.shape()) / std::max<std::size_t>(x.extent(0), 1);
  std::vector<T> data(x.data().begin() + begin * stride, x.data().begin() + end * stride);
  return BasicArray<T>(std::move(shape), std::move(data));
}

template <class T>
BasicArray<T> concat_cols(const std::vector<BasicArray<T>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: no parts");
  const std::size_t m = parts.front().extent(0);
  std::size_t width = 0;
  for (const auto& p : parts) {
    require_rank(p.shape(), 2, "concat_cols");
    if (p.extent(0) != m) throw ShapeMismatch("concat_cols: row counts differ");
    width += p.extent(1);
  }
  BasicArray<T> out({m, width});
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      auto src = p.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + off);
      off += p.extent(1);
    }
  }
  return out;
}

template <class T>
BasicArray<T> concat_rows(const std::vector<BasicArray<T>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows: no parts");
  const std::size_t width = parts.front().extent(1);
  std::size_t m = 0;
  std::vector<T> data;
  for (const auto& p : parts) {
    require_rank(p.shape(), 2, "concat_rows");
    if (p.extent(1) != width) throw ShapeMismatch("concat_rows: widths differ");
    m += p.extent(0);
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return BasicArray<T>({m, width}, std::move(data));
}

namespace {

template <class F>
Array zip(const Array& a, const Array& b, const char* what, F f) {
  require_shape(b.shape(), a.shape(), what);
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Array add(const Array& a, const Array& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}
Array sub(const Array& a, const Array& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
Array mul(const Array& a, const Array& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}
Array scale(const Array& a, double s) {
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

Array identity(std::size_t n) {
  Array out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

double max_abs_diff(const Array& a, const Array& b) {
  require_shape(b.shape(), a.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_rel_diff(const Array& a, const Array& b, double floor) {
  double scale_ref = 0.0;
  for (double v : b.data()) scale_ref = std::max(scale_ref, std::abs(v));
  return max_abs_diff(a, b) / std::max(scale_ref, floor);
}

double sum_squares(const Array& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

#define VMS_INSTANTIATE(T)                                                                    \
  template void check_finite<T>(const BasicArray<T>&, const char*);                          \
  template BasicArray<T> matmul<T>(const BasicArray<T>&, const BasicArray<T>&);              \
  template BasicArray<T> linear<T>(const BasicArray<T>&, const BasicArray<T>&,               \
                                   const BasicArray<T>&);                                    \
  template BasicArray<T> transpose<T>(const BasicArray<T>&);                                 \
  template BasicArray<T> reverse_seq<T>(const BasicArray<T>&);                               \
  template BasicArray<T> slice_cols<T>(const BasicArray<T>&, std::size_t, std::size_t);      \
  template BasicArray<T> slice_rows<T>(const BasicArray<T>&, std::size_t, std::size_t);      \
  template BasicArray<T> concat_cols<T>(const std::vector<BasicArray<T>>&);                  \
  template BasicArray<T> concat_rows<T>(const std::vector<BasicArray<T>>&);

VMS_INSTANTIATE(double)
VMS_INSTANTIATE(float)

#undef VMS_INSTANTIATE

}  // namespace vms
