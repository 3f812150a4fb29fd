#include "vms/ssm.hpp"

#include <cmath>

#include "vms/activations.hpp"

namespace vms {

namespace {

constexpr double kSmallZoh = 1e-8;

template <class T>
inline void zoh(T a, T delta, T& a_bar, T& phi) {
  const T z = delta * a;
  a_bar = std::exp(z);
  phi = std::abs(z) < T(kSmallZoh) ? delta : std::expm1(z) / a;
}

// (z e^z - (e^z - 1)) / z^2, i.e. d phi / d a divided by delta^2.
double zoh_phi_da_factor(double z) {
  if (std::abs(z) < 1e-3) {
    // sum_{m>=2} z^(m-2) (m-1)/m!
    double term_pow = 1.0, fact = 2.0, sum = 0.0;
    for (int m = 2; m < 10; ++m) {
      sum += term_pow * (m - 1) / fact;
      term_pow *= z;
      fact *= (m + 1);
    }
    return sum;
  }
  return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

}  // namespace

SsmParams zero_ssm_params(const SsmConfig& cfg) {
  if (cfg.d_inner == 0 || cfg.d_state == 0 || cfg.dt_rank == 0) {
    throw InvalidArgument("SsmConfig: d_inner, d_state and dt_rank must be >= 1");
  }
  const auto di = cfg.d_inner, n = cfg.d_state, r = cfg.dt_rank;
  return {Array({di, n}), Array({di, r}), Array({r, di}), Array({di}),
          Array({di, n}), Array({di, n}), Array({di})};
}

SsmParams init_ssm_params(const SsmConfig& cfg, Rng& rng) {
  SsmParams p = zero_ssm_params(cfg);
  const auto di = cfg.d_inner, n = cfg.d_state;
  for (std::size_t d = 0; d < di; ++d)
    for (std::size_t k = 0; k < n; ++k) p.a_log(d, k) = std::log(static_cast<double>(k + 1));

  const double in_bound = 1.0 / std::sqrt(static_cast<double>(di));
  const double rank_bound = 1.0 / std::sqrt(static_cast<double>(cfg.dt_rank));
  for (auto& v : p.dt_in.data()) v = rng.uniform(-in_bound, in_bound);
  for (auto& v : p.dt_proj_weight.data()) v = rng.uniform(-rank_bound, rank_bound);
  for (auto& v : p.dt_proj_bias.data()) {
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    v = dt + std::log(-std::expm1(-dt));  // softplus^-1(dt)
  }
  for (auto& v : p.b_proj.data()) v = rng.uniform(-in_bound, in_bound);
  for (auto& v : p.c_proj.data()) v = rng.uniform(-in_bound, in_bound);
  for (auto& v : p.d_skip.data()) v = 1.0;
  return p;
}

template <class T>
void validate_ssm_params(const BasicSsmParams<T>& p) {
  require_rank(p.a_log.shape(), 2, "ssm a_log");
  const auto di = p.d_inner(), n = p.d_state();
  require_rank(p.dt_in.shape(), 2, "ssm dt_in");
  const auto r = p.dt_rank();
  if (di == 0 || n == 0 || r == 0) throw ShapeMismatch("ssm: empty parameter extents");
  require_shape(p.dt_in.shape(), {di, r}, "ssm dt_in");
  require_shape(p.dt_proj_weight.shape(), {r, di}, "ssm dt_proj_weight");
  require_shape(p.dt_proj_bias.shape(), {di}, "ssm dt_proj_bias");
  require_shape(p.b_proj.shape(), {di, n}, "ssm b_proj");
  require_shape(p.c_proj.shape(), {di, n}, "ssm c_proj");
  require_shape(p.d_skip.shape(), {di}, "ssm d_skip");
  p.for_each([](std::string_view name, const BasicArray<T>& a) {
    check_finite(a, std::string("ssm ").append(name).c_str());
  });
}

// ---- discretization -----------------------------------------------------

ZohScalar zoh_scalar(double a, double delta) {
  ZohScalar out{};
  zoh(a, delta, out.a_bar, out.phi);
  return out;
}

ZohCoefficients discretize_zoh(const Array& a, const Array& b, const Array& delta) {
  require_rank(a.shape(), 2, "discretize_zoh a");
  require_rank(delta.shape(), 2, "discretize_zoh delta");
  const std::size_t di = a.extent(0), n = a.extent(1), m = delta.extent(0);
  if (delta.extent(1) != di) throw ShapeMismatch("discretize_zoh: delta width != a rows");
  const bool per_step = b.rank() == 3;
  if (per_step) {
    require_shape(b.shape(), {m, di, n}, "discretize_zoh b");
  } else {
    require_shape(b.shape(), {di, n}, "discretize_zoh b");
  }
  for (double v : a.data()) {
    if (!(v < 0.0)) throw NonNegativeA("discretize_zoh: A must be strictly negative");
  }
  for (double v : delta.data()) {
    if (!(v > 0.0)) throw NonPositiveDelta("discretize_zoh: delta must be strictly positive");
  }

  ZohCoefficients out{Array({m, di, n}), Array({m, di, n})};
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t d = 0; d < di; ++d) {
      for (std::size_t k = 0; k < n; ++k) {
        double a_bar = 0.0, phi = 0.0;
        zoh(a(d, k), delta(t, d), a_bar, phi);
        out.a_bar(t, d, k) = a_bar;
        out.b_bar(t, d, k) = phi * (per_step ? b(t, d, k) : b(d, k));
      }
    }
  }
  return out;
}

ScanResult scan_recurrent(const DiscreteSsm& sys, const Array& x, const ScanState& h0) {
  require_rank(x.shape(), 2, "scan_recurrent x");
  require_rank(h0.h.shape(), 2, "scan_recurrent h0");
  const std::size_t m = x.extent(0), di = x.extent(1), n = h0.h.extent(1);
  require_shape(h0.h.shape(), {di, n}, "scan_recurrent h0");
  require_shape(sys.a_bar.shape(), {m, di, n}, "scan_recurrent a_bar");
  require_shape(sys.b_bar.shape(), {m, di, n}, "scan_recurrent b_bar");
  require_shape(sys.c.shape(), {m, di, n}, "scan_recurrent c");
  check_finite(h0.h, "scan_recurrent h0");

  ScanResult out{Array({m, di}), h0};
  Array& h = out.last.h;
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t d = 0; d < di; ++d) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        double& hk = h(d, k);
        hk = sys.a_bar(t, d, k) * hk + sys.b_bar(t, d, k) * x(t, d);
        acc += sys.c(t, d, k) * hk;
      }
      out.y(t, d) = acc;
    }
  }
  return out;
}

Array kernel_conv(const DiscreteSsm& sys, std::size_t length) {
  require_rank(sys.a_bar.shape(), 3, "kernel_conv a_bar");
  const Shape& s = sys.a_bar.shape();
  require_shape(sys.b_bar.shape(), s, "kernel_conv b_bar");
  require_shape(sys.c.shape(), s, "kernel_conv c");
  if (s[0] == 0) throw ShapeMismatch("kernel_conv: system has no time slices");
  const std::size_t di = s[1], n = s[2], slice = di * n;
  for (const Array* arr : {&sys.a_bar, &sys.b_bar, &sys.c}) {
    for (std::size_t t = 1; t < s[0]; ++t) {
      for (std::size_t i = 0; i < slice; ++i) {
        if ((*arr)[t * slice + i] != (*arr)[i]) {
          throw TimeVaryingParams("kernel_conv: parameters change over time; no LTI kernel exists");
        }
      }
    }
  }
  Array kernel({length, di});
  for (std::size_t d = 0; d < di; ++d) {
    for (std::size_t k = 0; k < n; ++k) {
      const double a = sys.a_bar(0, d, k), c = sys.c(0, d, k);
      double p = sys.b_bar(0, d, k);  // a^t * b
      for (std::size_t t = 0; t < length; ++t) {
        kernel(t, d) += c * p;
        p *= a;
      }
    }
  }
  return kernel;
}

Array conv_apply(const Array& kernel, const Array& x) {
  require_rank(kernel.shape(), 2, "conv_apply kernel");
  require_rank(x.shape(), 2, "conv_apply x");
  const std::size_t m = x.extent(0), di = x.extent(1);
  if (kernel.extent(1) != di) throw ShapeMismatch("conv_apply: channel counts differ");
  if (kernel.extent(0) < m) throw ShapeMismatch("conv_apply: kernel shorter than input");
  Array y({m, di});
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t d = 0; d < di; ++d) {
      double acc = 0.0;
      for (std::size_t s = 0; s <= t; ++s) acc += kernel(t - s, d) * x(s, d);
      y(t, d) = acc;
    }
  }
  return y;
}

// ---- selective scan -----------------------------------------------------

template <class T>
BasicSelectiveResult<T> selective_scan_from(const BasicSsmParams<T>& p, const BasicArray<T>& x,
                                            const BasicArray<T>& h0, std::size_t chunk) {
  validate_ssm_params(p);
  require_rank(x.shape(), 2, "selective_scan x");
  const std::size_t m = x.extent(0), di = p.d_inner(), n = p.d_state();
  if (x.extent(1) != di) {
    throw ShapeMismatch("selective_scan: input width " + std::to_string(x.extent(1)) +
                        " != d_inner " + std::to_string(di));
  }
  require_shape(h0.shape(), {di, n}, "selective_scan h0");
  if (chunk == 0) throw InvalidArgument("selective_scan_chunked: chunk must be >= 1");
  check_finite(x, "selective_scan x");

  BasicArray<T> neg_a({di, n});
  for (std::size_t i = 0; i < neg_a.size(); ++i) neg_a[i] = -std::exp(p.a_log[i]);

  BasicSelectiveResult<T> out{BasicArray<T>({m, di}), h0};
  BasicArray<T>& h = out.h;
  for (std::size_t c0 = 0; c0 < m; c0 += chunk) {
    const std::size_t rows = std::min(chunk, m - c0);
    const BasicArray<T> xc = slice_rows(x, c0, c0 + rows);
    const BasicArray<T> u = linear(matmul(xc, p.dt_in), p.dt_proj_weight, p.dt_proj_bias);
    const BasicArray<T> bm = matmul(xc, p.b_proj);
    const BasicArray<T> cm = matmul(xc, p.c_proj);
    for (std::size_t t = 0; t < rows; ++t) {
      for (std::size_t d = 0; d < di; ++d) {
        const T delta = softplus(u(t, d));
        const T xd = xc(t, d);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          T a_bar, phi;
          zoh(neg_a(d, k), delta, a_bar, phi);
          T& hk = h(d, k);
          hk = a_bar * hk + phi * bm(t, k) * xd;
          acc += static_cast<double>(cm(t, k)) * static_cast<double>(hk);
        }
        out.y(c0 + t, d) = static_cast<T>(acc + static_cast<double>(p.d_skip[d]) * xd);
      }
    }
  }
  check_finite(out.y, "selective_scan output");
  return out;
}

template <class T>
BasicArray<T> selective_scan_chunked(const BasicSsmParams<T>& p, const BasicArray<T>& x,
                                     std::size_t chunk) {
  validate_ssm_params(p);
  return selective_scan_from(p, x, BasicArray<T>({p.d_inner(), p.d_state()}), chunk).y;
}

template <class T>
BasicArray<T> selective_scan(const BasicSsmParams<T>& p, const BasicArray<T>& x) {
  const std::size_t m = x.rank() == 2 ? x.extent(0) : 0;
  return selective_scan_chunked(p, x, std::max<std::size_t>(m, 1));
}

SsmGrads selective_scan_backward(const SsmParams& p, const Array& x, const Array& dy) {
  validate_ssm_params(p);
  require_rank(x.shape(), 2, "selective_scan_backward x");
  const std::size_t m = x.extent(0), di = p.d_inner(), n = p.d_state();
  if (x.extent(1) != di) throw ShapeMismatch("selective_scan_backward: input width != d_inner");
  require_shape(dy.shape(), x.shape(), "selective_scan_backward dy");

  // Forward pass, retaining every intermediate the reverse sweep needs.
  Array neg_a({di, n});
  for (std::size_t i = 0; i < neg_a.size(); ++i) neg_a[i] = -std::exp(p.a_log[i]);
  const Array r = matmul(x, p.dt_in);
  const Array u = linear(r, p.dt_proj_weight, p.dt_proj_bias);
  const Array bm = matmul(x, p.b_proj);
  const Array cm = matmul(x, p.c_proj);
  Array delta({m, di});
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = softplus(u[i]);

  Array hist({m + 1, di, n});  // hist[t] is the state before step t
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t d = 0; d < di; ++d) {
      for (std::size_t k = 0; k < n; ++k) {
        double a_bar, phi;
        zoh(neg_a(d, k), delta(t, d), a_bar, phi);
        hist(t + 1, d, k) = a_bar * hist(t, d, k) + phi * bm(t, k) * x(t, d);
      }
    }
  }

  SsmGrads g{zero_ssm_params({di, n, p.dt_rank()}), Array({m, di})};
  Array d_a({di, n}), d_b({m, n}), d_c({m, n}), d_delta({m, di});
  Array carry({di, n});  // gradient flowing into h_t from step t+1
  for (std::size_t t = m; t-- > 0;) {
    for (std::size_t d = 0; d < di; ++d) {
      const double xd = x(t, d), gy = dy(t, d), dt = delta(t, d);
      g.dx(t, d) += gy * p.d_skip[d];
      g.params.d_skip[d] += gy * xd;
      double dd = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = neg_a(d, k);
        double a_bar, phi;
        zoh(a, dt, a_bar, phi);
        const double h_prev = hist(t, d, k), h_cur = hist(t + 1, d, k);
        d_c(t, k) += gy * h_cur;
        const double dh = carry(d, k) + gy * cm(t, k);
        const double d_abar = dh * h_prev;
        const double d_phi = dh * bm(t, k) * xd;
        d_b(t, k) += dh * phi * xd;
        g.dx(t, d) += dh * phi * bm(t, k);
        dd += d_abar * a_bar * a + d_phi * a_bar;
        d_a(d, k) += d_abar * a_bar * dt + d_phi * dt * dt * zoh_phi_da_factor(dt * a);
        carry(d, k) = dh * a_bar;
      }
      d_delta(t, d) = dd;
    }
  }

  Array d_u({m, di});
  for (std::size_t i = 0; i < d_u.size(); ++i) d_u[i] = d_delta[i] * sigmoid(u[i]);
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t d = 0; d < di; ++d) g.params.dt_proj_bias[d] += d_u(t, d);

  const Array xt = transpose(x);
  g.params.dt_proj_weight = matmul(transpose(r), d_u);
  const Array d_r = matmul(d_u, transpose(p.dt_proj_weight));
  g.params.dt_in = matmul(xt, d_r);
  g.params.b_proj = matmul(xt, d_b);
  g.params.c_proj = matmul(xt, d_c);
  for (std::size_t i = 0; i < d_a.size(); ++i) g.params.a_log[i] = d_a[i] * neg_a[i];

  g.dx = add(g.dx, matmul(d_r, transpose(p.dt_in)));
  g.dx = add(g.dx, matmul(d_b, transpose(p.b_proj)));
  g.dx = add(g.dx, matmul(d_c, transpose(p.c_proj)));
  return g;
}

#define VMS_INSTANTIATE(T)                                                                     \
  template void validate_ssm_params<T>(const BasicSsmParams<T>&);                              \
  template BasicSelectiveResult<T> selective_scan_from<T>(                                     \
      const BasicSsmParams<T>&, const BasicArray<T>&, const BasicArray<T>&, std::size_t);      \
  template BasicArray<T> selective_scan_chunked<T>(const BasicSsmParams<T>&,                  \
                                                   const BasicArray<T>&, std::size_t);         \
  template BasicArray<T> selective_scan<T>(const BasicSsmParams<T>&, const BasicArray<T>&);

VMS_INSTANTIATE(double)
VMS_INSTANTIATE(float)

#undef VMS_INSTANTIATE

}  // namespace vms
