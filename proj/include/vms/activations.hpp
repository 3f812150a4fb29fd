#pragma once

#include <cmath>

namespace vms {

// ln(1 + e^x). Large positive x returns x + log1p(e^-x) so nothing overflows.
template <class T>
inline T softplus(T x) {
  if (x > T(20)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

template <class T>
inline T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
inline T silu(T x) {
  return x * sigmoid(x);
}

// d silu / dx = s + x s (1 - s)
template <class T>
inline T silu_grad(T x) {
  const T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

}  // namespace vms
