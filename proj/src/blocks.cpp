#include "vms/blocks.hpp"

#include <cmath>

#include <json.hpp>

#include "vms/activations.hpp"

namespace vms {

namespace {

// ---- construction -------------------------------------------------------

Linear make_linear(std::size_t in, std::size_t out, Rng* rng) {
  Linear l{Array({in, out}), Array({out})};
  if (rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : l.weight.data()) v = rng->uniform(-bound, bound);
  }
  return l;
}

DepthwiseConv make_conv(std::size_t channels, std::size_t width, Rng* rng) {
  DepthwiseConv c{Array({channels, width}), Array({channels})};
  if (rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    for (auto& v : c.weight.data()) v = rng->uniform(-bound, bound);
    for (auto& v : c.bias.data()) v = rng->uniform(-bound, bound);
  }
  return c;
}

SsmParams make_ssm(std::size_t d_inner, const BlockConfig& cfg, Rng* rng) {
  const SsmConfig sc{d_inner, cfg.d_state, cfg.resolved_dt_rank()};
  return rng ? init_ssm_params(sc, *rng) : zero_ssm_params(sc);
}

void check_config(const BlockConfig& cfg) {
  if (cfg.d_model == 0 || cfg.expand == 0 || cfg.d_state == 0 || cfg.conv_width == 0) {
    throw InvalidArgument("block config: D, E, N and conv_width must be >= 1");
  }
  if (cfg.kind == BlockKind::dbm && cfg.d_inner() % 2 != 0) {
    throw OddInnerWidth("dbm block: E*D = " + std::to_string(cfg.d_inner()) +
                        " must be even to split forward/backward halves");
  }
}

Block build_block(const BlockConfig& cfg, Rng* rng) {
  check_config(cfg);
  const std::size_t d = cfg.d_model, di = cfg.d_inner(), w = cfg.conv_width;
  switch (cfg.kind) {
    case BlockKind::mamba: {
      MambaBlock b{cfg, {}, {}, {}, {}};
      b.in_proj = make_linear(d, 2 * di, rng);
      b.conv = make_conv(di, w, rng);
      b.ssm = make_ssm(di, cfg, rng);
      b.out_proj = make_linear(di, d, rng);
      return b;
    }
    case BlockKind::vim: {
      ViMBlock b{cfg, {}, {}, {}, {}, {}, {}};
      b.in_proj = make_linear(d, 2 * di, rng);
      b.conv_fwd = make_conv(di, w, rng);
      b.conv_bwd = make_conv(di, w, rng);
      b.ssm_fwd = make_ssm(di, cfg, rng);
      b.ssm_bwd = make_ssm(di, cfg, rng);
      b.out_proj = make_linear(di, d, rng);
      return b;
    }
    case BlockKind::dbm: {
      const std::size_t half = di / 2;
      DBMBlock b{cfg, {}, {}, {}, {}, {}};
      b.in_proj = make_linear(d, 2 * di, rng);
      b.conv_fwd = make_conv(half, w, rng);
      b.conv_bwd = make_conv(half, w, rng);
      b.ssm = make_ssm(half, cfg, rng);
      b.out_proj = make_linear(di, d, rng);
      return b;
    }
  }
  throw InvalidArgument("unknown block kind");
}

// ---- forward pieces -----------------------------------------------------

template <class T>
BasicArray<T> depthwise_conv(const BasicDepthwiseConv<T>& c, const BasicArray<T>& x) {
  require_rank(x.shape(), 2, "depthwise_conv x");
  const std::size_t m = x.extent(0), ch = x.extent(1), w = c.weight.extent(1);
  require_shape(c.weight.shape(), {ch, w}, "depthwise_conv weight");
  require_shape(c.bias.shape(), {ch}, "depthwise_conv bias");
  BasicArray<T> out({m, ch});
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t d = 0; d < ch; ++d) {
      double acc = c.bias[d];
      for (std::size_t k = 0; k < w; ++k) {
        if (t + k + 1 < w) continue;  // left zero padding
        acc += static_cast<double>(c.weight(d, k)) * static_cast<double>(x(t + k + 1 - w, d));
      }
      out(t, d) = static_cast<T>(acc);
    }
  }
  return out;
}

template <class T>
BasicArray<T> silu_map(const BasicArray<T>& x) {
  BasicArray<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = silu(x[i]);
  return out;
}

template <class T>
BasicArray<T> hadamard(const BasicArray<T>& a, const BasicArray<T>& b) {
  require_shape(b.shape(), a.shape(), "hadamard");
  BasicArray<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// selective_scan(ssm, silu(conv(xs))), xs already in scan order.
template <class T>
BasicArray<T> scan_branch(const BasicDepthwiseConv<T>& conv, const BasicSsmParams<T>& ssm,
                          const BasicArray<T>& xs) {
  return selective_scan(ssm, silu_map(depthwise_conv(conv, xs)));
}

template <class T>
void check_block_input(const BasicArray<T>& x, std::size_t d_model, const char* what) {
  require_rank(x.shape(), 2, what);
  if (x.extent(1) != d_model) {
    throw ShapeMismatch(std::string(what) + ": input width " + std::to_string(x.extent(1)) +
                        " != D " + std::to_string(d_model));
  }
  check_finite(x, what);
}

// ---- backward pieces (double only) -------------------------------------

Array linear_backward(const Array& x, const Linear& l, const Array& dy, Linear& grad) {
  grad.weight = add(grad.weight, matmul(transpose(x), dy));
  for (std::size_t t = 0; t < dy.extent(0); ++t)
    for (std::size_t j = 0; j < dy.extent(1); ++j) grad.bias[j] += dy(t, j);
  return matmul(dy, transpose(l.weight));
}

Array conv_backward(const DepthwiseConv& c, const Array& x, const Array& dout, DepthwiseConv& grad) {
  const std::size_t m = x.extent(0), ch = x.extent(1), w = c.weight.extent(1);
  Array dx({m, ch});
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t d = 0; d < ch; ++d) {
      const double g = dout(t, d);
      grad.bias[d] += g;
      for (std::size_t k = 0; k < w; ++k) {
        if (t + k + 1 < w) continue;
        const std::size_t s = t + k + 1 - w;
        grad.weight(d, k) += g * x(s, d);
        dx(s, d) += g * c.weight(d, k);
      }
    }
  }
  return dx;
}

void add_into(SsmParams& into, const SsmParams& g) {
  std::vector<Array*> dst;
  into.for_each([&](std::string_view, Array& a) { dst.push_back(&a); });
  std::size_t i = 0;
  g.for_each([&](std::string_view, const Array& a) {
    *dst[i] = add(*dst[i], a);
    ++i;
  });
}

Array silu_backward(const Array& pre, const Array& dout) {
  Array out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = dout[i] * silu_grad(pre[i]);
  return out;
}

// Gradient through scan_branch; accumulates into conv_grad / ssm_grad.
Array scan_branch_backward(const DepthwiseConv& conv, const SsmParams& ssm, const Array& xs,
                           const Array& dy, DepthwiseConv& conv_grad, SsmParams& ssm_grad) {
  const Array pre = depthwise_conv(conv, xs);
  const Array u = silu_map(pre);
  SsmGrads sg = selective_scan_backward(ssm, u, dy);
  add_into(ssm_grad, sg.params);
  return conv_backward(conv, xs, silu_backward(pre, sg.dx), conv_grad);
}

std::size_t ssm_weight_count(const SsmParams& p) {
  return p.a_log.size() + p.dt_in.size() + p.dt_proj_weight.size() + p.b_proj.size() +
         p.c_proj.size() + p.d_skip.size();
}

}  // namespace

// ---- config -------------------------------------------------------------

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::mamba: return "mamba";
    case BlockKind::vim: return "vim";
    case BlockKind::dbm: return "dbm";
  }
  return "?";
}

BlockKind parse_block_kind(std::string_view name) {
  if (name == "mamba") return BlockKind::mamba;
  if (name == "vim") return BlockKind::vim;
  if (name == "dbm") return BlockKind::dbm;
  throw InvalidArgument("unknown block type '" + std::string(name) + "' (expected mamba|vim|dbm)");
}

BlockConfig block_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("block config: ") + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw InvalidArgument(std::string("block config: missing '") + key + "'");
    return j.at(key);
  };
  try {
    BlockConfig cfg;
    cfg.kind = parse_block_kind(need("type").get<std::string>());
    cfg.d_model = need("D").get<std::size_t>();
    cfg.expand = need("E").get<std::size_t>();
    cfg.d_state = need("N").get<std::size_t>();
    cfg.conv_width = need("conv_width").get<std::size_t>();
    cfg.seed = need("seed").get<std::uint64_t>();
    if (j.contains("dt_rank")) cfg.dt_rank = j.at("dt_rank").get<std::size_t>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("block config: ") + e.what());
  }
}

std::string block_config_to_json(const BlockConfig& cfg) {
  nlohmann::ordered_json j;
  j["type"] = std::string(to_string(cfg.kind));
  j["D"] = cfg.d_model;
  j["E"] = cfg.expand;
  j["N"] = cfg.d_state;
  j["conv_width"] = cfg.conv_width;
  j["seed"] = cfg.seed;
  if (cfg.dt_rank) j["dt_rank"] = cfg.dt_rank;
  return j.dump();
}

// ---- construction -------------------------------------------------------

Block make_block(const BlockConfig& cfg) {
  Rng rng(cfg.seed);
  return build_block(cfg, &rng);
}

Block zero_block(const BlockConfig& cfg) { return build_block(cfg, nullptr); }

BlockF to_float(const Block& block) {
  return std::visit(
      [](const auto& b) -> BlockF {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, MambaBlock>) {
          return BasicMambaBlock<float>{b.config, b.in_proj.template cast<float>(),
                                        b.conv.template cast<float>(),
                                        b.ssm.template cast<float>(),
                                        b.out_proj.template cast<float>()};
        } else if constexpr (std::is_same_v<B, ViMBlock>) {
          return BasicViMBlock<float>{
              b.config,                           b.in_proj.template cast<float>(),
              b.conv_fwd.template cast<float>(),  b.conv_bwd.template cast<float>(),
              b.ssm_fwd.template cast<float>(),   b.ssm_bwd.template cast<float>(),
              b.out_proj.template cast<float>()};
        } else {
          return BasicDBMBlock<float>{b.config,
                                      b.in_proj.template cast<float>(),
                                      b.conv_fwd.template cast<float>(),
                                      b.conv_bwd.template cast<float>(),
                                      b.ssm.template cast<float>(),
                                      b.out_proj.template cast<float>()};
        }
      },
      block);
}

const BlockConfig& block_config(const Block& block) {
  return std::visit([](const auto& b) -> const BlockConfig& { return b.config; }, block);
}

namespace {

template <class BlockT, class F>
void visit_tensors(BlockT& b, F& f) {
  auto linear = [&](const std::string& name, auto& l) {
    f(name + ".weight", l.weight);
    f(name + ".bias", l.bias);
  };
  auto ssm = [&](const std::string& name, auto& s) {
    s.for_each([&](std::string_view field, auto& a) { f(name + "." + std::string(field), a); });
  };
  using B = std::remove_const_t<BlockT>;
  linear("in_proj", b.in_proj);
  if constexpr (std::is_same_v<B, MambaBlock>) {
    linear("conv", b.conv);
    ssm("ssm", b.ssm);
  } else if constexpr (std::is_same_v<B, ViMBlock>) {
    linear("conv_fwd", b.conv_fwd);
    linear("conv_bwd", b.conv_bwd);
    ssm("ssm_fwd", b.ssm_fwd);
    ssm("ssm_bwd", b.ssm_bwd);
  } else {
    linear("conv_fwd", b.conv_fwd);
    linear("conv_bwd", b.conv_bwd);
    ssm("ssm", b.ssm);
  }
  linear("out_proj", b.out_proj);
}

}  // namespace

void for_each_tensor(Block& block, const std::function<void(const std::string&, Array&)>& f) {
  std::visit([&](auto& b) { visit_tensors(b, f); }, block);
}

void for_each_tensor(const Block& block,
                     const std::function<void(const std::string&, const Array&)>& f) {
  std::visit([&](const auto& b) { visit_tensors(b, f); }, block);
}

// ---- forward ------------------------------------------------------------

template <class T>
BasicArray<T> mamba_block_forward(const BasicMambaBlock<T>& p, const BasicArray<T>& x) {
  check_block_input(x, p.config.d_model, "mamba_block_forward");
  const std::size_t di = p.config.d_inner();
  const BasicArray<T> xz = linear(x, p.in_proj.weight, p.in_proj.bias);
  const BasicArray<T> y = scan_branch(p.conv, p.ssm, slice_cols(xz, 0, di));
  const BasicArray<T> gated = hadamard(y, silu_map(slice_cols(xz, di, 2 * di)));
  BasicArray<T> out = linear(gated, p.out_proj.weight, p.out_proj.bias);
  check_finite(out, "mamba_block_forward output");
  return out;
}

template <class T>
BasicArray<T> vim_block_forward(const BasicViMBlock<T>& p, const BasicArray<T>& x) {
  check_block_input(x, p.config.d_model, "vim_block_forward");
  const std::size_t di = p.config.d_inner();
  const BasicArray<T> xz = linear(x, p.in_proj.weight, p.in_proj.bias);
  const BasicArray<T> xs = slice_cols(xz, 0, di);
  const BasicArray<T> gate = silu_map(slice_cols(xz, di, 2 * di));
  const BasicArray<T> y_f = scan_branch(p.conv_fwd, p.ssm_fwd, xs);
  const BasicArray<T> y_b = reverse_seq(scan_branch(p.conv_bwd, p.ssm_bwd, reverse_seq(xs)));
  BasicArray<T> mixed(y_f.shape());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = T(0.5) * (y_f[i] * gate[i] + y_b[i] * gate[i]);
  }
  BasicArray<T> out = linear(mixed, p.out_proj.weight, p.out_proj.bias);
  check_finite(out, "vim_block_forward output");
  return out;
}

template <class T>
BasicArray<T> dbm_block_forward(const BasicDBMBlock<T>& p, const BasicArray<T>& x) {
  if (p.config.d_inner() % 2 != 0) throw OddInnerWidth("dbm_block_forward: E*D must be even");
  check_block_input(x, p.config.d_model, "dbm_block_forward");
  const std::size_t h = p.config.d_inner() / 2;
  const BasicArray<T> xz = linear(x, p.in_proj.weight, p.in_proj.bias);
  const BasicArray<T> y_f = scan_branch(p.conv_fwd, p.ssm, slice_cols(xz, 0, h));
  const BasicArray<T> y_b =
      reverse_seq(scan_branch(p.conv_bwd, p.ssm, reverse_seq(slice_cols(xz, 2 * h, 3 * h))));
  const BasicArray<T> g_f = hadamard(y_f, silu_map(slice_cols(xz, h, 2 * h)));
  const BasicArray<T> g_b = hadamard(y_b, silu_map(slice_cols(xz, 3 * h, 4 * h)));
  BasicArray<T> out = linear(concat_cols<T>({g_f, g_b}), p.out_proj.weight, p.out_proj.bias);
  check_finite(out, "dbm_block_forward output");
  return out;
}

template <class T>
BasicArray<T> block_forward(const BasicBlock<T>& block, const BasicArray<T>& x) {
  return std::visit(
      [&](const auto& b) -> BasicArray<T> {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, BasicMambaBlock<T>>) {
          return mamba_block_forward(b, x);
        } else if constexpr (std::is_same_v<B, BasicViMBlock<T>>) {
          return vim_block_forward(b, x);
        } else {
          return dbm_block_forward(b, x);
        }
      },
      block);
}

// ---- backward -----------------------------------------------------------

BlockGrads block_backward(const Block& block, const Array& x, const Array& dy) {
  const BlockConfig& cfg = block_config(block);
  check_block_input(x, cfg.d_model, "block_backward");
  require_shape(dy.shape(), x.shape(), "block_backward dy");
  BlockGrads g{zero_block(cfg), Array()};

  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        auto& gp = std::get<B>(g.params);
        const std::size_t di = cfg.d_inner();
        const Array xz = linear(x, b.in_proj.weight, b.in_proj.bias);

        if constexpr (std::is_same_v<B, MambaBlock>) {
          const Array xs = slice_cols(xz, 0, di), xg = slice_cols(xz, di, 2 * di);
          const Array y = scan_branch(b.conv, b.ssm, xs);
          const Array gate = silu_map(xg);
          const Array d_mixed =
              linear_backward(hadamard(y, gate), b.out_proj, dy, gp.out_proj);
          const Array d_xs =
              scan_branch_backward(b.conv, b.ssm, xs, hadamard(d_mixed, gate), gp.conv, gp.ssm);
          const Array d_xg = silu_backward(xg, hadamard(d_mixed, y));
          g.dx = linear_backward(x, b.in_proj, concat_cols<double>({d_xs, d_xg}), gp.in_proj);
        } else if constexpr (std::is_same_v<B, ViMBlock>) {
          const Array xs = slice_cols(xz, 0, di), xg = slice_cols(xz, di, 2 * di);
          const Array gate = silu_map(xg);
          const Array y_f = scan_branch(b.conv_fwd, b.ssm_fwd, xs);
          const Array y_b = reverse_seq(scan_branch(b.conv_bwd, b.ssm_bwd, reverse_seq(xs)));
          Array mixed(y_f.shape());
          for (std::size_t i = 0; i < mixed.size(); ++i) {
            mixed[i] = 0.5 * (y_f[i] * gate[i] + y_b[i] * gate[i]);
          }
          const Array d_mixed = linear_backward(mixed, b.out_proj, dy, gp.out_proj);
          Array d_branch(d_mixed.shape()), d_gate(d_mixed.shape());
          for (std::size_t i = 0; i < d_mixed.size(); ++i) {
            d_branch[i] = 0.5 * d_mixed[i] * gate[i];
            d_gate[i] = 0.5 * d_mixed[i] * (y_f[i] + y_b[i]);
          }
          const Array d_xs_f =
              scan_branch_backward(b.conv_fwd, b.ssm_fwd, xs, d_branch, gp.conv_fwd, gp.ssm_fwd);
          const Array d_xs_b = reverse_seq(scan_branch_backward(
              b.conv_bwd, b.ssm_bwd, reverse_seq(xs), reverse_seq(d_branch), gp.conv_bwd,
              gp.ssm_bwd));
          const Array d_xg = silu_backward(xg, d_gate);
          g.dx = linear_backward(x, b.in_proj, concat_cols<double>({add(d_xs_f, d_xs_b), d_xg}),
                                 gp.in_proj);
        } else {
          const std::size_t h = di / 2;
          const Array xs_f = slice_cols(xz, 0, h), xg_f = slice_cols(xz, h, 2 * h);
          const Array xs_b = slice_cols(xz, 2 * h, 3 * h), xg_b = slice_cols(xz, 3 * h, 4 * h);
          const Array gate_f = silu_map(xg_f), gate_b = silu_map(xg_b);
          const Array y_f = scan_branch(b.conv_fwd, b.ssm, xs_f);
          const Array y_b = reverse_seq(scan_branch(b.conv_bwd, b.ssm, reverse_seq(xs_b)));
          const Array cat = concat_cols<double>({hadamard(y_f, gate_f), hadamard(y_b, gate_b)});
          const Array d_cat = linear_backward(cat, b.out_proj, dy, gp.out_proj);
          const Array d_gf = slice_cols(d_cat, 0, h), d_gb = slice_cols(d_cat, h, 2 * h);
          const Array d_xs_f = scan_branch_backward(b.conv_fwd, b.ssm, xs_f, hadamard(d_gf, gate_f),
                                                    gp.conv_fwd, gp.ssm);
          const Array d_xs_b = reverse_seq(
              scan_branch_backward(b.conv_bwd, b.ssm, reverse_seq(xs_b),
                                   reverse_seq(hadamard(d_gb, gate_b)), gp.conv_bwd, gp.ssm));
          const Array d_xg_f = silu_backward(xg_f, hadamard(d_gf, y_f));
          const Array d_xg_b = silu_backward(xg_b, hadamard(d_gb, y_b));
          g.dx = linear_backward(x, b.in_proj,
                                 concat_cols<double>({d_xs_f, d_xg_f, d_xs_b, d_xg_b}), gp.in_proj);
        }
      },
      block);
  return g;
}

// ---- parameter accounting -----------------------------------------------

ParamCount count_params(const Block& block) {
  return std::visit(
      [](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        ParamCount c;
        c.static_weights = b.in_proj.weight.size() + b.out_proj.weight.size();
        c.bias = b.in_proj.bias.size() + b.out_proj.bias.size();
        if constexpr (std::is_same_v<B, MambaBlock>) {
          c.dynamic = b.conv.weight.size() + ssm_weight_count(b.ssm);
          c.dynamic_unique = c.dynamic;
          c.bias += b.conv.bias.size() + b.ssm.dt_proj_bias.size();
        } else if constexpr (std::is_same_v<B, ViMBlock>) {
          const std::size_t fwd = b.conv_fwd.weight.size() + ssm_weight_count(b.ssm_fwd);
          const std::size_t bwd = b.conv_bwd.weight.size() + ssm_weight_count(b.ssm_bwd);
          c.dynamic = fwd + bwd;
          c.dynamic_unique = fwd + bwd;
          c.bias += b.conv_fwd.bias.size() + b.conv_bwd.bias.size() + b.ssm_fwd.dt_proj_bias.size() +
                    b.ssm_bwd.dt_proj_bias.size();
        } else {
          const std::size_t shared = ssm_weight_count(b.ssm);
          const std::size_t convs = b.conv_fwd.weight.size() + b.conv_bwd.weight.size();
          c.dynamic = convs + 2 * shared;  // the shared SSM serves both passes
          c.dynamic_unique = convs + shared;
          c.bias += b.conv_fwd.bias.size() + b.conv_bwd.bias.size() + b.ssm.dt_proj_bias.size();
        }
        return c;
      },
      block);
}

TemporalBudget vim_temporal_budget(std::size_t width, std::size_t d_state, std::size_t conv_width) {
  BlockConfig cfg;
  cfg.kind = BlockKind::vim;
  cfg.d_model = width;
  cfg.expand = 1;
  cfg.d_state = d_state;
  cfg.conv_width = conv_width;
  const auto vim = std::get<ViMBlock>(zero_block(cfg));

  TemporalBudget b;
  b.width = width;
  b.attention_slot = 4 * width * width;
  b.vim_width_squared = vim.in_proj.weight.size() + vim.out_proj.weight.size();
  for (const SsmParams* s : {&vim.ssm_fwd, &vim.ssm_bwd}) {
    b.vim_width_squared += s->dt_in.size() + s->dt_proj_weight.size();
    b.vim_state_linear +=
        s->a_log.size() + s->b_proj.size() + s->c_proj.size() + s->d_skip.size();
  }
  b.vim_state_linear += vim.conv_fwd.weight.size() + vim.conv_bwd.weight.size();
  b.vim_all_weights = b.vim_width_squared + b.vim_state_linear;
  return b;
}

// ---- adapter ------------------------------------------------------------

Array adapter_forward(const AdapterConfig& cfg, const Array& tokens, const SpatialMixer& spatial) {
  require_rank(tokens.shape(), 3, "adapter_forward tokens");
  const std::size_t t_len = tokens.extent(0), p_len = tokens.extent(1), d = tokens.extent(2);
  if (d != block_config(cfg.inner).d_model) {
    throw ShapeMismatch("adapter_forward: token width " + std::to_string(d) +
                        " != inner block D " + std::to_string(block_config(cfg.inner).d_model));
  }
  check_finite(tokens, "adapter_forward tokens");

  // Temporal mixing per spatial position.
  Array temporal(tokens.shape());
  for (std::size_t p = 0; p < p_len; ++p) {
    Array seq({t_len, d});
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t c = 0; c < d; ++c) seq(t, c) = tokens(t, p, c);
    const Array mixed = block_forward(cfg.inner, seq);
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t c = 0; c < d; ++c) temporal(t, p, c) = mixed(t, c);
  }

  const double scale = std::tanh(cfg.gate);
  Array adapted = tokens;
  if (scale != 0.0) {
    for (std::size_t i = 0; i < adapted.size(); ++i) adapted[i] = tokens[i] + scale * temporal[i];
  }
  if (!spatial) return adapted;

  Array out(tokens.shape());
  const std::size_t frame = p_len * d;
  for (std::size_t t = 0; t < t_len; ++t) {
    const Array frame_in = slice_rows(adapted, t, t + 1).reshaped({p_len, d});
    const Array mixed = spatial(frame_in);
    require_shape(mixed.shape(), {p_len, d}, "adapter_forward spatial mixer output");
    const Array& base = cfg.style == AdapterStyle::vanilla ? adapted : tokens;
    for (std::size_t i = 0; i < frame; ++i) out[t * frame + i] = base[t * frame + i] + mixed[i];
  }
  check_finite(out, "adapter_forward output");
  return out;
}

#define VMS_INSTANTIATE(T)                                                                      \
  template BasicArray<T> mamba_block_forward<T>(const BasicMambaBlock<T>&, const BasicArray<T>&); \
  template BasicArray<T> vim_block_forward<T>(const BasicViMBlock<T>&, const BasicArray<T>&);     \
  template BasicArray<T> dbm_block_forward<T>(const BasicDBMBlock<T>&, const BasicArray<T>&);     \
  template BasicArray<T> block_forward<T>(const BasicBlock<T>&, const BasicArray<T>&);

VMS_INSTANTIATE(double)
VMS_INSTANTIATE(float)

#undef VMS_INSTANTIATE

}  // namespace vms
