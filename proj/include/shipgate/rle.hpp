#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "shipgate/common.hpp"

namespace shipgate {

// Run-length annotation: 1-based start pixel plus run length, column-major
// (pixel 1 is the top-left corner, pixel 2 the one below it).
struct RlePair {
  std::int64_t start = 0;   // 1-based linear pixel index
  std::int64_t length = 0;  // > 0

  bool operator==(const RlePair&) const = default;
};

using Rle = std::vector<RlePair>;

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int row, int col) const { return pixels[std::size_t(row) * width + col]; }
  void set(int row, int col) { pixels[std::size_t(row) * width + col] = 1; }
  std::int64_t popcount() const {
    std::int64_t n = 0;
    for (std::uint8_t p : pixels) n += p;
    return n;
  }
};

inline void validate_rle(const Rle& rle, int width, int height) {
  const std::int64_t total = std::int64_t{width} * height;
  std::int64_t prev_end = 0;  // exclusive 1-based end of the previous run
  for (const RlePair& r : rle) {
    if (r.start < 1 || r.length < 1)
      fail(ErrorCategory::validation, "run start and length must be >= 1");
    if (r.start + r.length - 1 > total)
      fail(ErrorCategory::validation,
           "run " + std::to_string(r.start) + "+" + std::to_string(r.length) +
               " exceeds pixel count " + std::to_string(total));
    if (r.start < prev_end)
      fail(ErrorCategory::validation, "runs overlap or are unsorted");
    prev_end = r.start + r.length;
  }
}

inline Mask decode_rle(const Rle& rle, int width = 768, int height = 768) {
  validate_rle(rle, width, height);
  Mask m;
  m.width = width;
  m.height = height;
  m.pixels.assign(std::size_t(width) * height, 0);
  for (const RlePair& r : rle)
    for (std::int64_t p = r.start; p < r.start + r.length; ++p) {
      const std::int64_t idx = p - 1;  // column-major linear index
      const int col = static_cast<int>(idx / height);
      const int row = static_cast<int>(idx % height);
      m.set(row, col);
    }
  return m;
}

// Column-major scan emitting maximal runs; inverse of decode_rle.
inline Rle encode_rle(const Mask& m) {
  Rle out;
  std::int64_t run_start = 0;  // 1-based; 0 = not in a run
  std::int64_t p = 0;
  for (int col = 0; col < m.width; ++col)
    for (int row = 0; row < m.height; ++row) {
      ++p;
      if (m.at(row, col)) {
        if (run_start == 0) run_start = p;
      } else if (run_start != 0) {
        out.push_back({run_start, p - run_start});
        run_start = 0;
      }
    }
  if (run_start != 0) out.push_back({run_start, p - run_start + 1});
  return out;
}

// Axis-aligned box over pixels, inclusive coordinates (x = column, y = row).
struct BBox {
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool operator==(const BBox&) const = default;

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
  std::int64_t area() const { return std::int64_t{width()} * height(); }
  // Side-length diagonal: a single pixel has diagonal sqrt(2).
  double diagonal() const {
    return std::sqrt(double(width()) * width() + double(height()) * height());
  }
  double area_fraction(int image_width, int image_height) const {
    return static_cast<double>(area()) /
           (static_cast<double>(image_width) * image_height);
  }
  void validate(int image_width, int image_height) const {
    if (x_min > x_max || y_min > y_max || x_min < 0 || y_min < 0 ||
        x_max >= image_width || y_max >= image_height)
      fail(ErrorCategory::validation, "bounding box outside image bounds");
  }
};

inline BBox mask_to_bbox(const Mask& m) {
  int x_min = m.width, y_min = m.height, x_max = -1, y_max = -1;
  for (int row = 0; row < m.height; ++row)
    for (int col = 0; col < m.width; ++col)
      if (m.at(row, col)) {
        x_min = std::min(x_min, col);
        x_max = std::max(x_max, col);
        y_min = std::min(y_min, row);
        y_max = std::max(y_max, row);
      }
  if (x_max < 0)
    fail(ErrorCategory::invalid_argument, "empty mask has no bounding box");
  return {x_min, y_min, x_max, y_max};
}

// Tight box straight from the runs, without materializing the mask.
// A run may span several columns; rows covered in a column depend on where
// the run enters and leaves it.
inline BBox bbox_from_rle(const Rle& rle, int width = 768, int height = 768) {
  validate_rle(rle, width, height);
  if (rle.empty())
    fail(ErrorCategory::invalid_argument, "empty annotation has no bounding box");
  int x_min = width, y_min = height, x_max = -1, y_max = -1;
  for (const RlePair& r : rle) {
    const std::int64_t first = r.start - 1;
    const std::int64_t last = r.start + r.length - 2;
    const int col_first = static_cast<int>(first / height);
    const int col_last = static_cast<int>(last / height);
    x_min = std::min(x_min, col_first);
    x_max = std::max(x_max, col_last);
    if (col_first == col_last) {
      y_min = std::min<int>(y_min, static_cast<int>(first % height));
      y_max = std::max<int>(y_max, static_cast<int>(last % height));
    } else {
      // Crosses a column boundary: touches the bottom of one column and
      // the top of the next.
      y_min = 0;
      y_max = height - 1;
    }
  }
  return {x_min, y_min, x_max, y_max};
}

}  // namespace shipgate
