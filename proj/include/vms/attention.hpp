#pragma once

#include "vms/array.hpp"
#include "vms/rng.hpp"

namespace vms {

template <class T>
struct BasicAttentionWeights {
  BasicArray<T> wq, wk, wv, wo;  // each [D, D]

  template <class U>
  BasicAttentionWeights<U> cast() const {
    return {wq.template cast<U>(), wk.template cast<U>(), wv.template cast<U>(),
            wo.template cast<U>()};
  }
};

using AttentionWeights = BasicAttentionWeights<double>;

AttentionWeights make_attention_weights(std::size_t width, Rng& rng);

// Single-head softmax(Q K^T / sqrt(D)) V, projected by wo. Materializes the
// full [M, M] score matrix; softmax subtracts the row maximum.
template <class T>
BasicArray<T> attention_naive(const BasicArray<T>& x, const BasicAttentionWeights<T>& w);

// Bytes attention_naive allocates for an [M, D] input of element size `elem`.
std::size_t attention_working_set(std::size_t tokens, std::size_t width, std::size_t elem);

}  // namespace vms
