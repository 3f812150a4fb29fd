#include "vms/attention.hpp"

#include <cmath>

namespace vms {

AttentionWeights make_attention_weights(std::size_t width, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  return {rng.uniform_array({width, width}, -bound, bound),
          rng.uniform_array({width, width}, -bound, bound),
          rng.uniform_array({width, width}, -bound, bound),
          rng.uniform_array({width, width}, -bound, bound)};
}

template <class T>
BasicArray<T> attention_naive(const BasicArray<T>& x, const BasicAttentionWeights<T>& w) {
  require_rank(x.shape(), 2, "attention_naive x");
  const std::size_t m = x.extent(0), d = x.extent(1);
  if (m == 0) throw ShapeMismatch("attention_naive: needs at least one token");
  for (const auto* mat : {&w.wq, &w.wk, &w.wv, &w.wo}) {
    require_shape(mat->shape(), {d, d}, "attention_naive weight");
  }
  const BasicArray<T> q = matmul(x, w.wq);
  const BasicArray<T> k = matmul(x, w.wk);
  const BasicArray<T> v = matmul(x, w.wv);

  BasicArray<T> scores = matmul(q, transpose(k));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < m; ++i) {
    auto row = scores.row(i);
    double peak = -INFINITY;
    for (auto& s : row) {
      s = static_cast<T>(s * inv_sqrt_d);
      peak = std::max(peak, static_cast<double>(s));
    }
    double total = 0.0;
    for (auto& s : row) {
      const double e = std::exp(static_cast<double>(s) - peak);
      s = static_cast<T>(e);
      total += e;
    }
    for (auto& s : row) s = static_cast<T>(s / total);
  }
  BasicArray<T> out = matmul(matmul(scores, v), w.wo);
  check_finite(out, "attention_naive output");
  return out;
}

std::size_t attention_working_set(std::size_t tokens, std::size_t width, std::size_t elem) {
  // scores [M,M] + q, k, v, k^T, context, output [M,D]
  return elem * (tokens * tokens + 6 * tokens * width);
}

template BasicArray<double> attention_naive<double>(const BasicArray<double>&,
                                                    const BasicAttentionWeights<double>&);
template BasicArray<float> attention_naive<float>(const BasicArray<float>&,
                                                  const BasicAttentionWeights<float>&);

}  // namespace vms
