#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shipgate/common.hpp"

namespace shipgate {

enum class Signedness { kSigned, kUnsigned };

inline const char* to_string(Signedness s) {
  return s == Signedness::kSigned ? "signed" : "unsigned";
}

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::int64_t size() const {
    return static_cast<std::int64_t>(channels) * height * width;
  }
  std::int64_t index(int c, int y, int x) const {
    return (static_cast<std::int64_t>(c) * height + y) * width + x;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" +
           std::to_string(width);
  }
};

inline bool valid_bit_width(int b) { return b == 1 || b == 2 || b == 4 || b == 8; }

// Largest representable magnitude for a bit width. Signed ranges are
// symmetric: -2^(b-1) is excluded so negation stays closed.
inline std::int32_t quant_max(int bit_width, Signedness s) {
  return s == Signedness::kSigned ? (1 << (bit_width - 1)) - 1
                                  : (1 << bit_width) - 1;
}
inline std::int32_t quant_min(int bit_width, Signedness s) {
  return s == Signedness::kSigned ? -quant_max(bit_width, s) : 0;
}

// Integer tensor with one scale for the whole tensor: real = value * scale.
// Immutable by convention once built; nothing in the library mutates a
// QuantTensor it did not just create.
struct QuantTensor {
  Shape shape;
  std::vector<std::int32_t> values;  // dense, row-major (channel, row, col)
  int bit_width = 8;
  Signedness signedness = Signedness::kSigned;
  double scale = 1.0;

  std::int64_t size() const { return shape.size(); }
  std::int32_t at(int c, int y, int x) const { return values[shape.index(c, y, x)]; }
  std::int32_t& at(int c, int y, int x) { return values[shape.index(c, y, x)]; }

  std::int64_t nonzero_count() const {
    return std::count_if(values.begin(), values.end(),
                         [](std::int32_t v) { return v != 0; });
  }
  double density() const {
    return size() == 0 ? 0.0
                       : static_cast<double>(nonzero_count()) /
                             static_cast<double>(size());
  }

  void validate() const {
    if (!valid_bit_width(bit_width))
      fail(ErrorCategory::validation,
           "bit width must be 1, 2, 4 or 8, got " + std::to_string(bit_width));
    if (!(scale > 0.0) || !std::isfinite(scale))
      fail(ErrorCategory::validation, "scale must be positive and finite");
    if (shape.channels < 0 || shape.height < 0 || shape.width < 0)
      fail(ErrorCategory::validation, "negative shape dimension");
    if (static_cast<std::int64_t>(values.size()) != shape.size())
      fail(ErrorCategory::validation,
           "buffer length " + std::to_string(values.size()) +
               " does not match shape " + shape.str());
    const std::int32_t lo = quant_min(bit_width, signedness);
    const std::int32_t hi = quant_max(bit_width, signedness);
    for (std::int32_t v : values)
      if (v < lo || v > hi)
        fail(ErrorCategory::validation,
             "value " + std::to_string(v) + " outside " +
                 std::string(to_string(signedness)) + " " +
                 std::to_string(bit_width) + "-bit range");
  }
};

// 32-bit accumulator grid holding pre-requantization sums.
struct Accumulator {
  Shape shape;
  std::vector<std::int32_t> values;
  double scale = 1.0;  // product of input and weight scales

  std::int64_t size() const { return shape.size(); }
  std::int32_t at(int c, int y, int x) const { return values[shape.index(c, y, x)]; }
  std::int32_t& at(int c, int y, int x) { return values[shape.index(c, y, x)]; }
};

// ----------------------------------------------------------------------------
// quantize / dequantize / requantize
// ----------------------------------------------------------------------------

// Symmetric per-tensor uniform quantization: scale = max|x| / qmax, values
// round-half-even then clamp. An all-zero input gets scale 1.
inline QuantTensor quantize(std::span<const double> data, Shape shape,
                            int bit_width, Signedness signedness) {
  if (!valid_bit_width(bit_width))
    fail(ErrorCategory::invalid_argument,
         "bit width must be 1, 2, 4 or 8, got " + std::to_string(bit_width));
  const std::int32_t qmax = quant_max(bit_width, signedness);
  const std::int32_t qmin = quant_min(bit_width, signedness);
  if (qmax < 1)
    fail(ErrorCategory::invalid_argument,
         "signed 1-bit quantization has an empty range");
  if (static_cast<std::int64_t>(data.size()) != shape.size())
    fail(ErrorCategory::invalid_argument,
         "data length does not match shape " + shape.str());

  double max_abs = 0.0;
  for (double x : data) {
    if (!std::isfinite(x))
      fail(ErrorCategory::invalid_argument, "non-finite input to quantize");
    max_abs = std::max(max_abs, std::fabs(x));
  }
  QuantTensor q;
  q.shape = shape;
  q.bit_width = bit_width;
  q.signedness = signedness;
  q.scale = max_abs > 0.0 ? max_abs / qmax : 1.0;
  q.values.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::int64_t r = round_half_even(data[i] / q.scale);
    q.values[i] = static_cast<std::int32_t>(std::clamp<std::int64_t>(r, qmin, qmax));
  }
  return q;
}

inline std::vector<double> dequantize(const QuantTensor& q) {
  std::vector<double> out(q.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = q.values[i] * q.scale;
  return out;
}

// Scalar path shared by requantize() and the activation functions.
inline std::int32_t requantize_value(std::int32_t value, double value_scale,
                                     double out_scale, std::int32_t qmin,
                                     std::int32_t qmax) {
  const std::int64_t r =
      round_half_even(static_cast<double>(value) * value_scale / out_scale);
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(r, qmin, qmax));
}

inline QuantTensor requantize(const Accumulator& acc, double out_scale,
                              int out_bits, Signedness signedness) {
  if (!(out_scale > 0.0) || !std::isfinite(out_scale))
    fail(ErrorCategory::invalid_argument, "out_scale must be positive and finite");
  if (!valid_bit_width(out_bits))
    fail(ErrorCategory::invalid_argument, "invalid output bit width");
  const std::int32_t qmin = quant_min(out_bits, signedness);
  const std::int32_t qmax = quant_max(out_bits, signedness);
  QuantTensor q;
  q.shape = acc.shape;
  q.bit_width = out_bits;
  q.signedness = signedness;
  q.scale = out_scale;
  q.values.resize(acc.values.size());
  for (std::size_t i = 0; i < acc.values.size(); ++i)
    q.values[i] = requantize_value(acc.values[i], acc.scale, out_scale, qmin, qmax);
  return q;
}

}  // namespace shipgate
