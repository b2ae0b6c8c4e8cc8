#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "shipgate/rle.hpp"

namespace shipgate {

// One annotation row: one ship per record, empty RLE for ship-free images.
struct AnnotationRecord {
  std::string image_id;
  Rle rle;
};

enum class Split { train, val };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "val"; }

struct SplitInfo {
  std::uint64_t seed = 0;
  double ratio = 0.8;  // train fraction
  std::unordered_map<std::string, Split> assignment;
};

struct DatasetManifest {
  int image_width = 768;
  int image_height = 768;
  std::vector<AnnotationRecord> records;
  SplitInfo split;  // empty assignment until split() runs

  // Unique image ids in first-appearance order.
  std::vector<std::string> image_ids() const {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const AnnotationRecord& r : records)
      if (seen.insert(r.image_id).second) ids.push_back(r.image_id);
    return ids;
  }
};

namespace detail {

inline std::int64_t parse_int_field(const std::string& field, int line_no) {
  std::int64_t v = 0;
  const char* b = field.data();
  const char* e = b + field.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    fail(ErrorCategory::format,
         "line " + std::to_string(line_no) + ": bad integer '" + field + "'");
  return v;
}

inline Rle parse_rle_field(const std::string& field, int line_no) {
  Rle rle;
  std::istringstream ss(field);
  std::string tok;
  std::vector<std::int64_t> nums;
  while (ss >> tok) nums.push_back(parse_int_field(tok, line_no));
  if (nums.size() % 2 != 0)
    fail(ErrorCategory::format,
         "line " + std::to_string(line_no) + ": odd number of RLE tokens");
  for (std::size_t i = 0; i < nums.size(); i += 2)
    rle.push_back({nums[i], nums[i + 1]});
  return rle;
}

}  // namespace detail

// CSV with columns image_id, encoded_pixels (the public annotation layout;
// "ImageId,EncodedPixels" headers are accepted unchanged). The pixel field
// holds space-separated start/length pairs and may be empty or quoted.
inline DatasetManifest parse_manifest_csv(const std::string& content,
                                          int image_width = 768,
                                          int image_height = 768) {
  DatasetManifest m;
  m.image_width = image_width;
  m.image_height = image_height;

  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCategory::format, "empty manifest: missing header");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || normalize_column_name(header[0]) != "imageid" ||
      normalize_column_name(header[1]) != "encodedpixels")
    fail(ErrorCategory::format,
         "manifest header must be image_id,encoded_pixels");

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      fail(ErrorCategory::format, "line " + std::to_string(line_no) +
                                      ": expected 2 fields, got " +
                                      std::to_string(fields.size()));
    if (fields[0].empty())
      fail(ErrorCategory::format,
           "line " + std::to_string(line_no) + ": empty image id");
    AnnotationRecord rec;
    rec.image_id = fields[0];
    rec.rle = detail::parse_rle_field(fields[1], line_no);
    validate_rle(rec.rle, image_width, image_height);
    m.records.push_back(std::move(rec));
  }
  return m;
}

inline DatasetManifest load_manifest_csv(const std::string& path,
                                         int image_width = 768,
                                         int image_height = 768) {
  return parse_manifest_csv(read_binary_file(path), image_width, image_height);
}

inline std::string manifest_to_csv(const DatasetManifest& m) {
  std::ostringstream out;
  out << "image_id,encoded_pixels\n";
  for (const AnnotationRecord& r : m.records) {
    out << r.image_id << ',';
    for (std::size_t i = 0; i < r.rle.size(); ++i) {
      if (i) out << ' ';
      out << r.rle[i].start << ' ' << r.rle[i].length;
    }
    out << '\n';
  }
  return out.str();
}

// 1 iff any record for the image has a non-empty RLE.
inline int binary_label(const std::vector<const AnnotationRecord*>& records) {
  for (const AnnotationRecord* r : records)
    if (!r->rle.empty()) return 1;
  return 0;
}

inline std::unordered_map<std::string, int> labels_by_image(
    const DatasetManifest& m) {
  std::unordered_map<std::string, int> labels;
  for (const AnnotationRecord& r : m.records) {
    auto [it, inserted] = labels.try_emplace(r.image_id, 0);
    if (!r.rle.empty()) it->second = 1;
  }
  return labels;
}

// Deterministic split: images are ordered by a seeded hash of their id and
// the first round(n * ratio) become the training set. The ordering depends
// only on (image_id, seed), so shuffling or extending the manifest with the
// same ids reproduces the same relative order, and counts are exact to the
// rounding of n * ratio.
inline void split(DatasetManifest& m, double ratio = 0.8,
                  std::uint64_t seed = 0) {
  if (!(ratio > 0.0 && ratio < 1.0))
    fail(ErrorCategory::invalid_argument, "split ratio must lie in (0,1)");
  std::vector<std::string> ids = m.image_ids();
  std::sort(ids.begin(), ids.end(),
            [seed](const std::string& a, const std::string& b) {
              const std::uint64_t ha = fnv1a64_salted(a, seed);
              const std::uint64_t hb = fnv1a64_salted(b, seed);
              return ha != hb ? ha < hb : a < b;
            });
  const std::int64_t n_train =
      round_half_even(static_cast<double>(ids.size()) * ratio);
  m.split.seed = seed;
  m.split.ratio = ratio;
  m.split.assignment.clear();
  for (std::size_t i = 0; i < ids.size(); ++i)
    m.split.assignment[ids[i]] =
        static_cast<std::int64_t>(i) < n_train ? Split::train : Split::val;
}

inline nlohmann::json split_sidecar_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["seed"] = m.split.seed;
  j["ratio"] = m.split.ratio;
  std::int64_t n_train = 0, n_val = 0;
  nlohmann::json assign = nlohmann::json::object();
  for (const auto& [id, s] : std::map<std::string, Split>(
           m.split.assignment.begin(), m.split.assignment.end())) {
    assign[id] = to_string(s);
    (s == Split::train ? n_train : n_val)++;
  }
  j["n_train"] = n_train;
  j["n_val"] = n_val;
  j["assignment"] = assign;
  return j;
}

struct DatasetStats {
  std::int64_t n_images = 0;
  double ship_fraction = 0.0;
  std::int64_t n_boxes = 0;
  double median_diagonal = 0.0;  // lower median for even counts
  double mean_area_ratio = 0.0;
};

inline DatasetStats dataset_stats(const DatasetManifest& m) {
  if (m.records.empty())
    fail(ErrorCategory::invalid_argument, "empty manifest");
  const auto labels = labels_by_image(m);
  DatasetStats st;
  st.n_images = static_cast<std::int64_t>(labels.size());
  std::int64_t positives = 0;
  for (const auto& [id, label] : labels) positives += label;
  st.ship_fraction = static_cast<double>(positives) / static_cast<double>(st.n_images);

  std::vector<double> diagonals;
  double area_sum = 0.0;
  for (const AnnotationRecord& r : m.records) {
    if (r.rle.empty()) continue;
    const BBox box = bbox_from_rle(r.rle, m.image_width, m.image_height);
    diagonals.push_back(box.diagonal());
    area_sum += box.area_fraction(m.image_width, m.image_height);
  }
  st.n_boxes = static_cast<std::int64_t>(diagonals.size());
  if (!diagonals.empty()) {
    std::sort(diagonals.begin(), diagonals.end());
    st.median_diagonal = diagonals[(diagonals.size() - 1) / 2];
    st.mean_area_ratio = area_sum / static_cast<double>(diagonals.size());
  }
  return st;
}

inline nlohmann::json stats_to_json(const DatasetStats& st) {
  return {{"n_images", st.n_images},
          {"ship_fraction", st.ship_fraction},
          {"n_boxes", st.n_boxes},
          {"median_diagonal_px", st.median_diagonal},
          {"mean_area_ratio", st.mean_area_ratio}};
}

// Histogram of box diagonals as CSV rows bin_lo,bin_hi,count,cum_fraction.
inline std::string diagonal_histogram_csv(const DatasetManifest& m,
                                          double bin_width = 10.0) {
  if (!(bin_width > 0.0))
    fail(ErrorCategory::invalid_argument, "bin width must be positive");
  std::vector<double> diagonals;
  for (const AnnotationRecord& r : m.records)
    if (!r.rle.empty())
      diagonals.push_back(
          bbox_from_rle(r.rle, m.image_width, m.image_height).diagonal());
  std::map<std::int64_t, std::int64_t> bins;
  for (double d : diagonals) bins[static_cast<std::int64_t>(d / bin_width)]++;
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,cumulative_fraction\n";
  out.precision(12);
  std::int64_t cum = 0;
  const double total = static_cast<double>(diagonals.size());
  for (const auto& [bin, count] : bins) {
    cum += count;
    out << bin * bin_width << ',' << (bin + 1) * bin_width << ',' << count
        << ',' << (total > 0 ? cum / total : 0.0) << '\n';
  }
  return out.str();
}

}  // namespace shipgate
