#pragma once

#include <cctype>
#include <cstdint>
#include <string>

#include "shipgate/graph.hpp"
#include "shipgate/qtensor.hpp"

namespace shipgate {

namespace detail {

// Skips whitespace and '#' comments between PPM header tokens.
inline std::size_t ppm_skip(const std::string& s, std::size_t pos) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  return pos;
}

inline std::size_t ppm_read_int(const std::string& s, std::size_t pos, int& out,
                                const std::string& path) {
  pos = ppm_skip(s, pos);
  std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos == start)
    fail(ErrorCategory::format, path + ": expected integer in PPM header");
  out = std::stoi(s.substr(start, pos - start));
  return pos;
}

}  // namespace detail

// Binary PPM (P6, maxval 255) into a planar 3xHxW 8-bit unsigned tensor
// with scale 1.
inline QuantTensor load_ppm(const std::string& path) {
  const std::string s = read_binary_file(path);
  if (s.size() < 2 || s[0] != 'P' || s[1] != '6')
    fail(ErrorCategory::format, path + ": not a P6 PPM file");
  int w = 0, h = 0, maxval = 0;
  std::size_t pos = 2;
  pos = detail::ppm_read_int(s, pos, w, path);
  pos = detail::ppm_read_int(s, pos, h, path);
  pos = detail::ppm_read_int(s, pos, maxval, path);
  if (maxval != 255)
    fail(ErrorCategory::format, path + ": only maxval 255 is supported");
  if (pos >= s.size() || !std::isspace(static_cast<unsigned char>(s[pos])))
    fail(ErrorCategory::format, path + ": malformed PPM header");
  ++pos;  // single whitespace before the raster
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (s.size() - pos < need)
    fail(ErrorCategory::truncated, path + ": PPM raster shorter than declared");

  QuantTensor t;
  t.shape = {3, h, w};
  t.bit_width = 8;
  t.signedness = Signedness::kUnsigned;
  t.scale = 1.0;
  t.values.resize(t.shape.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(c, y, x) = static_cast<unsigned char>(
            s[pos + (static_cast<std::size_t>(y) * w + x) * 3 + c]);
  return t;
}

// Raw planar u8 bytes, channel-major (c, y, x).
inline QuantTensor load_raw_u8(const std::string& path, Shape shape) {
  const std::string s = read_binary_file(path);
  if (static_cast<std::int64_t>(s.size()) != shape.size())
    fail(ErrorCategory::truncated,
         path + ": expected " + std::to_string(shape.size()) + " bytes, got " +
             std::to_string(s.size()));
  QuantTensor t;
  t.shape = shape;
  t.bit_width = 8;
  t.signedness = Signedness::kUnsigned;
  t.scale = 1.0;
  t.values.resize(shape.size());
  for (std::int64_t i = 0; i < shape.size(); ++i)
    t.values[i] = static_cast<unsigned char>(s[i]);
  return t;
}

// Integer box-filter downsize by an exact factor (768 -> 256 uses factor 3);
// each output pixel is the round-half-even mean of a factor x factor block.
inline QuantTensor downsample_box(const QuantTensor& t, int factor) {
  if (factor <= 0 || t.shape.height % factor != 0 || t.shape.width % factor != 0)
    fail(ErrorCategory::invalid_argument,
         "image size must be an exact multiple of the downsize factor");
  QuantTensor out;
  out.shape = {t.shape.channels, t.shape.height / factor, t.shape.width / factor};
  out.bit_width = t.bit_width;
  out.signedness = t.signedness;
  out.scale = t.scale;
  out.values.resize(out.shape.size());
  const std::int64_t block = std::int64_t{factor} * factor;
  for (int c = 0; c < out.shape.channels; ++c)
    for (int y = 0; y < out.shape.height; ++y)
      for (int x = 0; x < out.shape.width; ++x) {
        std::int64_t sum = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            sum += t.at(c, y * factor + dy, x * factor + dx);
        out.at(c, y, x) = static_cast<std::int32_t>(
            round_half_even(static_cast<double>(sum) / static_cast<double>(block)));
      }
  return out;
}

// Adapts a loaded image to a graph's input spec: pass-through when the
// shape matches, box downsize when dimensions are an exact multiple.
inline QuantTensor prepare_input(const QuantTensor& img, const InputSpec& spec) {
  if (img.shape == spec.shape) return img;
  if (img.shape.channels == spec.shape.channels &&
      spec.shape.height > 0 && img.shape.height % spec.shape.height == 0 &&
      img.shape.height / spec.shape.height ==
          (spec.shape.width > 0 ? img.shape.width / spec.shape.width : -1) &&
      img.shape.width % spec.shape.width == 0)
    return downsample_box(img, img.shape.height / spec.shape.height);
  fail(ErrorCategory::validation,
       "image shape " + img.shape.str() + " incompatible with input spec " +
           spec.shape.str());
}

// Deterministic random test image (uniform bytes).
inline QuantTensor synth_image(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  QuantTensor t;
  t.shape = shape;
  t.bit_width = 8;
  t.signedness = Signedness::kUnsigned;
  t.scale = 1.0;
  t.values.resize(shape.size());
  for (auto& v : t.values) v = static_cast<std::int32_t>(rng.next_below(256));
  return t;
}

}  // namespace shipgate
