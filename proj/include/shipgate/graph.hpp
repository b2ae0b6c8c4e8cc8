#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "shipgate/qtensor.hpp"

namespace shipgate {

enum class LayerKind { conv2d, separable_conv2d, linear, global_avg_pool };
enum class Activation { relu_quant, none };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::separable_conv2d: return "separable_conv2d";
    case LayerKind::linear: return "linear";
    case LayerKind::global_avg_pool: return "global_avg_pool";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "separable_conv2d") return LayerKind::separable_conv2d;
  if (s == "linear") return LayerKind::linear;
  if (s == "global_avg_pool") return LayerKind::global_avg_pool;
  fail(ErrorCategory::format, "unknown layer kind '" + s + "'");
}

inline const char* to_string(Activation a) {
  return a == Activation::relu_quant ? "relu_quant" : "none";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu_quant") return Activation::relu_quant;
  if (s == "none") return Activation::none;
  fail(ErrorCategory::format, "unknown activation '" + s + "'");
}

// Depthwise intermediates of separable layers are requantized to signed
// 8 bit before the pointwise stage.
inline constexpr int kDwIntermediateBits = 8;

// Weight layout conventions:
//   conv2d            weights (out*in, k, k), indexed [out][in][ky][kx]
//   separable_conv2d  weights (in, 3, 3) depthwise, pw_weights (out*in, 1, 1)
//   linear            weights (out, 1, flat_in); in_channels = flat_in
//   global_avg_pool   no weights
// Bias integers are a small signed tensor (out, 1, 1) with an independent
// scale; the engine rebases them into accumulator units once per forward.
struct LayerSpec {
  LayerKind kind = LayerKind::conv2d;
  int kernel = 3;
  int stride = 1;
  bool same_padding = true;
  int in_channels = 0;
  int out_channels = 0;
  Activation activation = Activation::relu_quant;
  int out_bits = 4;
  double out_scale = 1.0;
  double dw_out_scale = 1.0;  // separable_conv2d only
  QuantTensor weights;
  QuantTensor pw_weights;
  QuantTensor bias;

  bool has_bias() const { return !bias.values.empty(); }
};

struct InputSpec {
  Shape shape;
  int bit_width = 8;
  Signedness signedness = Signedness::kUnsigned;
  double scale = 1.0;
};

struct GraphMetadata {
  bool synthetic = false;
  std::uint64_t seed = 0;
  double sparsity_bias = 0.0;
  std::int64_t parameter_count = 0;
};

struct ModelGraph {
  std::string name;
  InputSpec input;
  std::vector<LayerSpec> layers;
  GraphMetadata metadata;
};

inline int padding_of(const LayerSpec& s) {
  return s.same_padding ? (s.kernel - 1) / 2 : 0;
}

inline Shape layer_output_shape(const LayerSpec& s, const Shape& in) {
  switch (s.kind) {
    case LayerKind::conv2d:
    case LayerKind::separable_conv2d: {
      const int p = padding_of(s);
      const int oh = (in.height + 2 * p - s.kernel) / s.stride + 1;
      const int ow = (in.width + 2 * p - s.kernel) / s.stride + 1;
      return {s.out_channels, oh, ow};
    }
    case LayerKind::linear:
      return {s.out_channels, 1, 1};
    case LayerKind::global_avg_pool:
      return {in.channels, 1, 1};
  }
  return {};
}

inline std::int64_t parameter_count(const ModelGraph& g) {
  std::int64_t n = 0;
  for (const LayerSpec& s : g.layers)
    n += s.weights.size() + s.pw_weights.size() + s.bias.size();
  return n;
}

// Bias integers rebased into accumulator units (round-half-even, once).
inline std::vector<std::int32_t> effective_bias(const LayerSpec& s,
                                                double acc_scale) {
  std::vector<std::int32_t> out(s.bias.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int64_t v = round_half_even(
        static_cast<double>(s.bias.values[i]) * s.bias.scale / acc_scale);
    out[i] = static_cast<std::int32_t>(
        std::clamp<std::int64_t>(v, INT32_MIN, INT32_MAX));
  }
  return out;
}

namespace detail {

[[noreturn]] inline void graph_fail(int layer_index, const std::string& msg) {
  fail(ErrorCategory::validation,
       "layer " + std::to_string(layer_index) + ": " + msg);
}

inline void check_weight_tensor(int li, const QuantTensor& w, Shape expected,
                                const char* what) {
  if (!(w.shape == expected))
    graph_fail(li, std::string(what) + " shape " + w.shape.str() +
                       ", expected " + expected.str());
  if (w.signedness != Signedness::kSigned)
    graph_fail(li, std::string(what) + " must be signed");
  w.validate();
}

inline std::int64_t max_abs_effective_bias(const LayerSpec& s,
                                           double acc_scale) {
  std::int64_t m = 0;
  for (std::int32_t b : effective_bias(s, acc_scale))
    m = std::max<std::int64_t>(m, b < 0 ? -std::int64_t{b} : std::int64_t{b});
  return m;
}

}  // namespace detail

// Full structural check: layer shape chaining, weight/bias tensor shapes and
// ranges, scale positivity, a binary (1-logit) head, and the per-layer
// 32-bit accumulator bound fan_in * max|activation| * max|weight| + |bias|.
// Errors carry the offending layer index.
inline void validate_graph(const ModelGraph& g) {
  if (g.layers.empty()) fail(ErrorCategory::validation, "graph has no layers");
  if (g.input.shape.size() <= 0)
    fail(ErrorCategory::validation, "empty input shape");
  if (!valid_bit_width(g.input.bit_width))
    fail(ErrorCategory::validation, "invalid input bit width");
  if (!(g.input.scale > 0.0))
    fail(ErrorCategory::validation, "input scale must be positive");

  constexpr std::int64_t kAccLimit = std::int64_t{1} << 31;
  Shape cur = g.input.shape;
  double in_scale = g.input.scale;
  // Largest magnitude an incoming activation can take.
  std::int64_t in_max = std::max<std::int64_t>(
      std::abs(quant_min(g.input.bit_width, g.input.signedness)),
      quant_max(g.input.bit_width, g.input.signedness));

  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const LayerSpec& s = g.layers[i];
    const int li = static_cast<int>(i);
    const bool is_last = (i + 1 == g.layers.size());

    if (s.kind != LayerKind::global_avg_pool) {
      if (!(s.out_scale > 0.0) || !std::isfinite(s.out_scale))
        detail::graph_fail(li, "out_scale must be positive and finite");
      if (!valid_bit_width(s.out_bits))
        detail::graph_fail(li, "invalid out_bits");
    }

    std::int64_t acc_bound = 0;
    std::int64_t bias_bound = 0;

    switch (s.kind) {
      case LayerKind::conv2d: {
        if (s.kernel != 1 && s.kernel != 3)
          detail::graph_fail(li, "kernel must be 1 or 3");
        if (s.stride != 1 && s.stride != 2)
          detail::graph_fail(li, "stride must be 1 or 2");
        if (s.in_channels != cur.channels)
          detail::graph_fail(li, "in_channels " + std::to_string(s.in_channels) +
                                     " does not match incoming " +
                                     std::to_string(cur.channels));
        detail::check_weight_tensor(
            li, s.weights,
            {s.out_channels * s.in_channels, s.kernel, s.kernel}, "weights");
        const double acc_scale = in_scale * s.weights.scale;
        if (s.has_bias()) {
          detail::check_weight_tensor(li, s.bias, {s.out_channels, 1, 1}, "bias");
          bias_bound = detail::max_abs_effective_bias(s, acc_scale);
        }
        const std::int64_t fan = std::int64_t{s.in_channels} * s.kernel * s.kernel;
        acc_bound = fan * in_max * quant_max(s.weights.bit_width, Signedness::kSigned);
        break;
      }
      case LayerKind::separable_conv2d: {
        if (s.kernel != 3) detail::graph_fail(li, "separable kernel must be 3");
        if (s.stride != 1 && s.stride != 2)
          detail::graph_fail(li, "stride must be 1 or 2");
        if (s.in_channels != cur.channels)
          detail::graph_fail(li, "in_channels does not match incoming shape");
        detail::check_weight_tensor(li, s.weights, {s.in_channels, 3, 3},
                                    "depthwise weights");
        detail::check_weight_tensor(
            li, s.pw_weights, {s.out_channels * s.in_channels, 1, 1},
            "pointwise weights");
        if (!(s.dw_out_scale > 0.0) || !std::isfinite(s.dw_out_scale))
          detail::graph_fail(li, "dw_out_scale must be positive and finite");
        const double pw_acc_scale = s.dw_out_scale * s.pw_weights.scale;
        if (s.has_bias()) {
          detail::check_weight_tensor(li, s.bias, {s.out_channels, 1, 1}, "bias");
          bias_bound = detail::max_abs_effective_bias(s, pw_acc_scale);
        }
        const std::int64_t dw_bound =
            9 * in_max * quant_max(s.weights.bit_width, Signedness::kSigned);
        if (dw_bound >= kAccLimit)
          detail::graph_fail(li, "depthwise accumulator bound exceeds 32 bits");
        const std::int64_t inter_max =
            quant_max(kDwIntermediateBits, Signedness::kSigned);
        acc_bound = std::int64_t{s.in_channels} * inter_max *
                    quant_max(s.pw_weights.bit_width, Signedness::kSigned);
        break;
      }
      case LayerKind::linear: {
        if (s.in_channels != cur.size())
          detail::graph_fail(li, "linear in_channels " +
                                     std::to_string(s.in_channels) +
                                     " does not match flattened input " +
                                     std::to_string(cur.size()));
        detail::check_weight_tensor(li, s.weights,
                                    {s.out_channels, 1, s.in_channels},
                                    "weights");
        const double acc_scale = in_scale * s.weights.scale;
        if (s.has_bias()) {
          detail::check_weight_tensor(li, s.bias, {s.out_channels, 1, 1}, "bias");
          bias_bound = detail::max_abs_effective_bias(s, acc_scale);
        }
        acc_bound = std::int64_t{s.in_channels} * in_max *
                    quant_max(s.weights.bit_width, Signedness::kSigned);
        break;
      }
      case LayerKind::global_avg_pool: {
        if (s.out_channels != cur.channels)
          detail::graph_fail(li, "pool cannot change channel count");
        if (s.weights.size() != 0 || s.pw_weights.size() != 0 || s.has_bias())
          detail::graph_fail(li, "pool takes no weights");
        acc_bound = in_max * std::int64_t{cur.height} * cur.width;
        break;
      }
    }

    if (acc_bound + bias_bound >= kAccLimit)
      detail::graph_fail(li, "accumulator overflow bound exceeded: " +
                                 std::to_string(acc_bound + bias_bound));

    const Shape next = layer_output_shape(s, cur);
    if (next.size() <= 0)
      detail::graph_fail(li, "layer collapses input " + cur.str() +
                                 " to empty output");
    cur = next;

    if (is_last) {
      if (s.kind != LayerKind::linear || s.out_channels != 1 ||
          s.activation != Activation::none)
        detail::graph_fail(li,
                           "final layer must be a 1-output linear head with no "
                           "activation");
    } else if (s.kind != LayerKind::global_avg_pool) {
      // Pooling keeps the incoming quantization; everything else requantizes.
      in_max = s.activation == Activation::relu_quant
                   ? quant_max(s.out_bits, Signedness::kUnsigned)
                   : quant_max(s.out_bits, Signedness::kSigned);
      in_scale = s.out_scale;
    }
  }
}

}  // namespace shipgate
