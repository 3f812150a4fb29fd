#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

#include "vms/array.hpp"
#include "vms/rng.hpp"
#include "vms/ssm.hpp"

namespace vms {

enum class BlockKind { mamba, vim, dbm };

std::string_view to_string(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);

struct BlockConfig {
  BlockKind kind = BlockKind::mamba;
  std::size_t d_model = 0;     // D
  std::size_t expand = 2;      // E
  std::size_t d_state = 16;    // N
  std::size_t conv_width = 4;  // w
  std::size_t dt_rank = 0;     // 0 means ceil(D / 16)
  std::uint64_t seed = 0;

  std::size_t d_inner() const { return expand * d_model; }
  std::size_t resolved_dt_rank() const { return dt_rank ? dt_rank : (d_model + 15) / 16; }
};

// {"type": "mamba"|"vim"|"dbm", "D": .., "E": .., "N": .., "conv_width": .., "seed": ..}
// "dt_rank" is optional. Throws InvalidArgument on unknown types or missing fields.
BlockConfig block_config_from_json(const std::string& text);
std::string block_config_to_json(const BlockConfig& cfg);

template <class T>
struct BasicLinear {
  BasicArray<T> weight;  // [in, out]
  BasicArray<T> bias;    // [out]

  template <class U>
  BasicLinear<U> cast() const {
    return {weight.template cast<U>(), bias.template cast<U>()};
  }
};

// Causal depthwise 1-D convolution with left zero padding:
//   out[t, c] = bias[c] + sum_k weight[c, k] * in[t - (w - 1) + k, c]
template <class T>
struct BasicDepthwiseConv {
  BasicArray<T> weight;  // [channels, w]
  BasicArray<T> bias;    // [channels]

  template <class U>
  BasicDepthwiseConv<U> cast() const {
    return {weight.template cast<U>(), bias.template cast<U>()};
  }
};

using Linear = BasicLinear<double>;
using DepthwiseConv = BasicDepthwiseConv<double>;

/// Vanilla Mamba block.
///
///   [x_s | x_g] = in_proj(x)                       each [M, E*D]
///   y   = selective_scan(ssm, silu(conv(x_s)))
///   out = out_proj(y * silu(x_g))
template <class T>
struct BasicMambaBlock {
  BlockConfig config;
  BasicLinear<T> in_proj;  // D -> 2ED
  BasicDepthwiseConv<T> conv;
  BasicSsmParams<T> ssm;    // d_inner = ED
  BasicLinear<T> out_proj;  // ED -> D
};

/// Bidirectional block with a shared projection and gate, and one SSM (plus
/// conv) per scan direction. The backward direction scans the time-reversed
/// stream and its output is reversed back; both gated streams are averaged
/// before out_proj.
template <class T>
struct BasicViMBlock {
  BlockConfig config;
  BasicLinear<T> in_proj;  // D -> 2ED
  BasicDepthwiseConv<T> conv_fwd;
  BasicDepthwiseConv<T> conv_bwd;
  BasicSsmParams<T> ssm_fwd;  // d_inner = ED
  BasicSsmParams<T> ssm_bwd;  // d_inner = ED
  BasicLinear<T> out_proj;    // ED -> D
};

/// Decomposed bidirectional block. in_proj columns are four disjoint groups of
/// width H = ED/2, in order [x_s fwd | x_g fwd | x_s bwd | x_g bwd]. One SSM
/// over H channels serves both directions. Gated outputs are concatenated as
/// [fwd | bwd] and fed to out_proj.
template <class T>
struct BasicDBMBlock {
  BlockConfig config;
  BasicLinear<T> in_proj;  // D -> 2ED
  BasicDepthwiseConv<T> conv_fwd;
  BasicDepthwiseConv<T> conv_bwd;
  BasicSsmParams<T> ssm;    // d_inner = ED/2, shared
  BasicLinear<T> out_proj;  // ED -> D
};

using MambaBlock = BasicMambaBlock<double>;
using ViMBlock = BasicViMBlock<double>;
using DBMBlock = BasicDBMBlock<double>;

template <class T>
using BasicBlock = std::variant<BasicMambaBlock<T>, BasicViMBlock<T>, BasicDBMBlock<T>>;
using Block = BasicBlock<double>;
using BlockF = BasicBlock<float>;

// Random initialization from cfg.seed. DBM with odd E*D throws OddInnerWidth.
Block make_block(const BlockConfig& cfg);
// Same shapes as make_block, all tensors zero.
Block zero_block(const BlockConfig& cfg);
BlockF to_float(const Block& block);

const BlockConfig& block_config(const Block& block);

// Visits every tensor of the block as f(qualified_name, tensor), in a fixed order.
void for_each_tensor(Block& block, const std::function<void(const std::string&, Array&)>& f);
void for_each_tensor(const Block& block,
                     const std::function<void(const std::string&, const Array&)>& f);

template <class T>
BasicArray<T> mamba_block_forward(const BasicMambaBlock<T>& p, const BasicArray<T>& x);
template <class T>
BasicArray<T> vim_block_forward(const BasicViMBlock<T>& p, const BasicArray<T>& x);
template <class T>
BasicArray<T> dbm_block_forward(const BasicDBMBlock<T>& p, const BasicArray<T>& x);
template <class T>
BasicArray<T> block_forward(const BasicBlock<T>& block, const BasicArray<T>& x);

struct BlockGrads {
  Block params;  // gradient for each tensor, same layout as the block
  Array dx;
};

// Reverse-mode gradients of <dy, block_forward(block, x)>.
BlockGrads block_backward(const Block& block, const Array& x, const Array& dy);

// ---- parameter accounting -----------------------------------------------

/// Parameter tallies, biases excluded from every field except `bias`.
///
/// static:   dense projections (in_proj, out_proj weights).
/// dynamic:  parameters engaged by scanning, summed over scan passes. Each
///           direction's conv and SSM tensors count once per pass that uses
///           them, so an SSM shared by two passes counts twice.
/// dynamic_unique: the same tensors counted once each.
/// bias:     every bias vector (in/out projections, convs, dt_proj_bias).
struct ParamCount {
  std::size_t static_weights = 0;
  std::size_t dynamic = 0;
  std::size_t dynamic_unique = 0;
  std::size_t bias = 0;
};

ParamCount count_params(const Block& block);

/// Temporal-slot comparison at width C: a self-attention slot (Q, K, V, O)
/// holds 4C^2 weights; a ViM block at E = 1 holds 3C^2 in in/out projections
/// plus the two low-rank delta paths.
struct TemporalBudget {
  std::size_t width = 0;
  std::size_t attention_slot = 0;     // 4 C^2
  std::size_t vim_width_squared = 0;  // in_proj + out_proj + delta paths (both directions)
  std::size_t vim_state_linear = 0;   // B/C projections, A, d_skip, conv weights (O(C N))
  std::size_t vim_all_weights = 0;    // sum of the two above
};

TemporalBudget vim_temporal_budget(std::size_t width, std::size_t d_state = 16,
                                   std::size_t conv_width = 4);

// ---- temporal adapter ---------------------------------------------------

enum class AdapterStyle { vanilla, frozen };

struct AdapterConfig {
  AdapterStyle style = AdapterStyle::vanilla;
  double gate = 0.0;  // tanh-gated; zero at initialization
  Block inner;        // token mixer run over the temporal axis
};

// Spatial token mixer applied per frame, [P, D] -> [P, D].
using SpatialMixer = std::function<Array(const Array&)>;

/// Divided space-time layer with a tanh-gated temporal adapter.
///
/// tokens is [T, P, D]. For each spatial position p the inner block mixes the
/// T temporal tokens, giving temporal(x). Then with a = x + tanh(gate) * temporal(x):
///
///   vanilla:  out = a + spatial(a)     temporal module as an extra residual
///                                      branch ahead of spatial attention
///   frozen:   out = x + spatial(a)     temporal output feeds spatial attention;
///                                      the residual skips to the raw input
///
/// Without a spatial mixer both styles return a. With gate == 0 the result is
/// exactly the layer without a temporal module (x, or x + spatial(x)).
Array adapter_forward(const AdapterConfig& cfg, const Array& tokens,
                      const SpatialMixer& spatial = {});

}  // namespace vms
