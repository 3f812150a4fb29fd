#pragma once

#include <cstddef>
#include <string_view>

#include "vms/array.hpp"
#include "vms/rng.hpp"

namespace vms {

struct SsmConfig {
  std::size_t d_inner = 0;  // channel count
  std::size_t d_state = 16;
  std::size_t dt_rank = 1;  // width of the low-rank path that produces delta
};

/// Learnable parameters of one selective SSM over `d_inner` channels.
///
/// Per step t with input row x_t (length d_inner):
///   delta_t = softplus((x_t * dt_in) * dt_proj_weight + dt_proj_bias)   [d_inner]
///   B_t = x_t * b_proj,  C_t = x_t * c_proj                              [d_state]
///   A = -exp(a_log)                                                       [d_inner, d_state]
/// and the output adds the per-channel skip d_skip * x_t.
template <class T>
struct BasicSsmParams {
  BasicArray<T> a_log;           // [d_inner, d_state]
  BasicArray<T> dt_in;           // [d_inner, dt_rank]
  BasicArray<T> dt_proj_weight;  // [dt_rank, d_inner]
  BasicArray<T> dt_proj_bias;    // [d_inner]
  BasicArray<T> b_proj;          // [d_inner, d_state]
  BasicArray<T> c_proj;          // [d_inner, d_state]
  BasicArray<T> d_skip;          // [d_inner]

  std::size_t d_inner() const { return a_log.extent(0); }
  std::size_t d_state() const { return a_log.extent(1); }
  std::size_t dt_rank() const { return dt_in.extent(1); }

  // Visits every tensor as f(name, tensor). Order is stable and part of the
  // golden-vector format.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  template <class U>
  BasicSsmParams<U> cast() const {
    return {a_log.template cast<U>(),          dt_in.template cast<U>(),
            dt_proj_weight.template cast<U>(), dt_proj_bias.template cast<U>(),
            b_proj.template cast<U>(),         c_proj.template cast<U>(),
            d_skip.template cast<U>()};
  }

 private:
  template <class Self, class F>
  static void visit(Self& s, F& f) {
    f(std::string_view("a_log"), s.a_log);
    f(std::string_view("dt_in"), s.dt_in);
    f(std::string_view("dt_proj_weight"), s.dt_proj_weight);
    f(std::string_view("dt_proj_bias"), s.dt_proj_bias);
    f(std::string_view("b_proj"), s.b_proj);
    f(std::string_view("c_proj"), s.c_proj);
    f(std::string_view("d_skip"), s.d_skip);
  }
};

using SsmParams = BasicSsmParams<double>;
using SsmParamsF = BasicSsmParams<float>;

// Parameters shaped for `cfg`, all zero.
SsmParams zero_ssm_params(const SsmConfig& cfg);
// a_log[d, n] = ln(n + 1); dt bias chosen so softplus(bias) is log-uniform in
// [1e-3, 1e-1]; projections uniform in +-1/sqrt(fan_in); d_skip = 1.
SsmParams init_ssm_params(const SsmConfig& cfg, Rng& rng);
// Throws ShapeMismatch on inconsistent tensor shapes, NonFinite on bad values.
template <class T>
void validate_ssm_params(const BasicSsmParams<T>& p);

// ---- discretization -----------------------------------------------------

/// ZOH for one diagonal entry: a_bar = exp(delta a), b_bar = phi * b with
/// phi = (exp(delta a) - 1) / a. For |delta a| < 1e-8 the limit phi = delta is used.
struct ZohScalar {
  double a_bar;
  double phi;
};
ZohScalar zoh_scalar(double a, double delta);

struct ZohCoefficients {
  Array a_bar;  // [M, d_inner, N]
  Array b_bar;  // [M, d_inner, N]
};

// a: [d_inner, N] strictly negative. b: [d_inner, N] (shared over time) or
// [M, d_inner, N]. delta: [M, d_inner] strictly positive.
ZohCoefficients discretize_zoh(const Array& a, const Array& b, const Array& delta);

/// Discretized system over M steps. scan input x enters as b_bar * x_t.
struct DiscreteSsm {
  Array a_bar;  // [M, d_inner, N]
  Array b_bar;  // [M, d_inner, N]
  Array c;      // [M, d_inner, N]
};

struct ScanState {
  Array h;  // [d_inner, N]
};

struct ScanResult {
  Array y;  // [M, d_inner]
  ScanState last;
};

// h_t = a_bar_t h_{t-1} + b_bar_t x_t,  y_t = <c_t, h_t>, left to right.
ScanResult scan_recurrent(const DiscreteSsm& d, const Array& x, const ScanState& h0);

// K[t, d] = sum_n c[d,n] a_bar[d,n]^t b_bar[d,n], t < length. Requires every
// time slice of `d` to be identical (LTI); otherwise TimeVaryingParams.
Array kernel_conv(const DiscreteSsm& d, std::size_t length);
// Causal per-channel convolution y[t,d] = sum_{s<=t} K[t-s,d] x[s,d].
Array conv_apply(const Array& kernel, const Array& x);

// ---- selective scan -----------------------------------------------------

template <class T>
struct BasicSelectiveResult {
  BasicArray<T> y;  // [M, d_inner]
  BasicArray<T> h;  // [d_inner, N] state after the last step
};

// Whole-sequence selective scan with h0 = 0.
template <class T>
BasicArray<T> selective_scan(const BasicSsmParams<T>& p, const BasicArray<T>& x);

// Same computation processed `chunk` rows at a time, carrying the state between
// chunks. Projections are evaluated per chunk as dense products.
template <class T>
BasicArray<T> selective_scan_chunked(const BasicSsmParams<T>& p, const BasicArray<T>& x,
                                     std::size_t chunk);

// Chunked scan from an explicit initial state; exposes the final state so
// callers can stream.
template <class T>
BasicSelectiveResult<T> selective_scan_from(const BasicSsmParams<T>& p, const BasicArray<T>& x,
                                            const BasicArray<T>& h0, std::size_t chunk);

struct SsmGrads {
  SsmParams params;  // same layout as the parameters
  Array dx;          // [M, d_inner]
};

// Reverse-mode gradients of <dy, selective_scan(p, x)>.
SsmGrads selective_scan_backward(const SsmParams& p, const Array& x, const Array& dy);

}  // namespace vms
