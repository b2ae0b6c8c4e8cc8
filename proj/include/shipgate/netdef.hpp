#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "shipgate/graph.hpp"

namespace shipgate {

namespace detail {

inline QuantTensor zero_weights(Shape shape, int bits, double scale) {
  QuantTensor t;
  t.shape = shape;
  t.bit_width = bits;
  t.signedness = Signedness::kSigned;
  t.scale = scale;
  t.values.assign(static_cast<std::size_t>(shape.size()), 0);
  return t;
}

}  // namespace detail

// AkidaNet 0.5 gating classifier: a MobileNet-style stack at width 0.5.
// Stem 3x3 stride-2 conv (16 filters, 8-bit weights on the 8-bit input),
// 13 separable blocks on the halved MobileNet filter schedule with the five
// standard downsampling points, global average pool, and a single linear
// head producing one logit. Hidden weights and activations are 4 bit.
// Weights are zero until loaded or synthesized.
inline ModelGraph build_akidanet05() {
  // (out_channels, stride) per separable block.
  static constexpr std::array<std::pair<int, int>, 13> kBlocks = {{
      {32, 1}, {64, 2}, {64, 1}, {128, 2}, {128, 1}, {256, 2}, {256, 1},
      {256, 1}, {256, 1}, {256, 1}, {256, 1}, {512, 2}, {512, 1},
  }};

  ModelGraph g;
  g.name = "akidanet05";
  g.input = {{3, 256, 256}, 8, Signedness::kUnsigned, 1.0};

  LayerSpec stem;
  stem.kind = LayerKind::conv2d;
  stem.kernel = 3;
  stem.stride = 2;
  stem.same_padding = true;
  stem.in_channels = 3;
  stem.out_channels = 16;
  stem.activation = Activation::relu_quant;
  stem.out_bits = 4;
  stem.weights = detail::zero_weights({16 * 3, 3, 3}, 8, 1.0 / 127.0);
  stem.bias = detail::zero_weights({16, 1, 1}, 8, 1.0);
  g.layers.push_back(stem);

  int ch = 16;
  for (const auto& [out, stride] : kBlocks) {
    LayerSpec blk;
    blk.kind = LayerKind::separable_conv2d;
    blk.kernel = 3;
    blk.stride = stride;
    blk.same_padding = true;
    blk.in_channels = ch;
    blk.out_channels = out;
    blk.activation = Activation::relu_quant;
    blk.out_bits = 4;
    blk.weights = detail::zero_weights({ch, 3, 3}, 4, 1.0 / 7.0);
    blk.pw_weights = detail::zero_weights({out * ch, 1, 1}, 4, 1.0 / 7.0);
    blk.bias = detail::zero_weights({out, 1, 1}, 8, 1.0);
    g.layers.push_back(blk);
    ch = out;
  }

  LayerSpec pool;
  pool.kind = LayerKind::global_avg_pool;
  pool.in_channels = ch;
  pool.out_channels = ch;
  pool.kernel = 1;
  g.layers.push_back(pool);

  LayerSpec head;
  head.kind = LayerKind::linear;
  head.in_channels = ch;
  head.out_channels = 1;
  head.kernel = 1;
  head.activation = Activation::none;
  head.out_bits = 8;
  head.weights = detail::zero_weights({1, 1, ch}, 4, 1.0 / 7.0);
  head.bias = detail::zero_weights({1, 1, 1}, 8, 1.0);
  g.layers.push_back(head);

  g.metadata.parameter_count = parameter_count(g);
  validate_graph(g);
  return g;
}

namespace detail {

// Second moment of a uniform integer draw over [-q, q].
inline double uniform_int_ex2(int q) {
  return static_cast<double>(q) * (q + 1) / 3.0;
}

inline void fill_uniform_weights(QuantTensor& w, Rng& rng) {
  const std::int32_t q = quant_max(w.bit_width, Signedness::kSigned);
  for (auto& v : w.values) v = static_cast<std::int32_t>(rng.next_int(-q, q));
  w.scale = 1.0 / q;
}

// Negative offsets proportional to sparsity_bias, in units of the estimated
// accumulator deviation sigma, plus small per-channel noise.
inline void fill_bias(QuantTensor& bias, Rng& rng, double acc_scale,
                      double sigma, double sparsity_bias) {
  bias.scale = acc_scale * std::max(sigma, 1.0) / 32.0;
  for (auto& v : bias.values) {
    const double jitter = 0.75 + 0.5 * rng.next_real();
    const std::int64_t target =
        round_half_even(-sparsity_bias * jitter * 32.0) + rng.next_int(-3, 3);
    v = static_cast<std::int32_t>(std::clamp<std::int64_t>(target, -127, 127));
  }
}

}  // namespace detail

// Deterministic pseudo-random quantized weights for a graph template.
// Activation scales are set from moment estimates of the accumulator spread
// so hidden activations neither saturate nor vanish; sparsity_bias >= 0
// shifts biases negative so ReLU outputs thin out, which is what density
// and energy experiments need in place of trained weights.
inline ModelGraph synth_weights(const ModelGraph& template_graph,
                                std::uint64_t seed, double sparsity_bias = 0.0) {
  if (sparsity_bias < 0.0)
    fail(ErrorCategory::invalid_argument, "sparsity_bias must be >= 0");
  ModelGraph g = template_graph;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);

  double in_scale = g.input.scale;
  // Running estimate of E[x^2] of incoming integer activations.
  const double in_qmax =
      quant_max(g.input.bit_width, g.input.signedness);
  double in_ex2 = in_qmax * in_qmax / 3.0;

  for (LayerSpec& s : g.layers) {
    switch (s.kind) {
      case LayerKind::conv2d:
      case LayerKind::linear: {
        detail::fill_uniform_weights(s.weights, rng);
        const std::int64_t fan =
            s.kind == LayerKind::linear
                ? s.in_channels
                : std::int64_t{s.in_channels} * s.kernel * s.kernel;
        const double sigma = std::sqrt(
            static_cast<double>(fan) *
            detail::uniform_int_ex2(quant_max(s.weights.bit_width,
                                              Signedness::kSigned)) *
            in_ex2);
        const double acc_scale = in_scale * s.weights.scale;
        if (s.has_bias())
          detail::fill_bias(s.bias, rng, acc_scale, sigma, sparsity_bias);
        const double qmax_out = quant_max(s.out_bits, Signedness::kUnsigned);
        s.out_scale = acc_scale * std::max(2.0 * sigma, 1.0) / qmax_out;
        in_scale = s.out_scale;
        in_ex2 = qmax_out * qmax_out / 4.0;
        break;
      }
      case LayerKind::separable_conv2d: {
        detail::fill_uniform_weights(s.weights, rng);
        detail::fill_uniform_weights(s.pw_weights, rng);
        const double dw_sigma = std::sqrt(
            9.0 *
            detail::uniform_int_ex2(quant_max(s.weights.bit_width,
                                              Signedness::kSigned)) *
            in_ex2);
        const double dw_acc_scale = in_scale * s.weights.scale;
        const double inter_qmax =
            quant_max(kDwIntermediateBits, Signedness::kSigned);
        s.dw_out_scale = dw_acc_scale * std::max(2.0 * dw_sigma, 1.0) / inter_qmax;
        const double inter_ex2 = inter_qmax * inter_qmax / 4.0;

        const double pw_sigma = std::sqrt(
            static_cast<double>(s.in_channels) *
            detail::uniform_int_ex2(quant_max(s.pw_weights.bit_width,
                                              Signedness::kSigned)) *
            inter_ex2);
        const double pw_acc_scale = s.dw_out_scale * s.pw_weights.scale;
        if (s.has_bias())
          detail::fill_bias(s.bias, rng, pw_acc_scale, pw_sigma, sparsity_bias);
        const double qmax_out = quant_max(s.out_bits, Signedness::kUnsigned);
        s.out_scale = pw_acc_scale * std::max(2.0 * pw_sigma, 1.0) / qmax_out;
        in_scale = s.out_scale;
        in_ex2 = qmax_out * qmax_out / 4.0;
        break;
      }
      case LayerKind::global_avg_pool:
        break;  // scale and range pass through
    }
  }

  g.metadata.synthetic = true;
  g.metadata.seed = seed;
  g.metadata.sparsity_bias = sparsity_bias;
  g.metadata.parameter_count = parameter_count(g);
  validate_graph(g);
  return g;
}

}  // namespace shipgate
