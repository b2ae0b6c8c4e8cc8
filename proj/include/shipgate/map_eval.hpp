#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "shipgate/dataset.hpp"
#include "shipgate/rle.hpp"

namespace shipgate {

struct Detection {
  std::string image_id;
  BBox bbox;
  double confidence = 0.0;
};

struct DetectionSet {
  std::vector<Detection> detections;
  std::string source;  // "imported" | "synthetic"
};

using GroundTruth = std::map<std::string, std::vector<BBox>>;

// Intersection over union with the inclusive-pixel area convention
// (width = x_max - x_min + 1).
inline double iou(const BBox& a, const BBox& b) {
  const int ix_min = std::max(a.x_min, b.x_min);
  const int iy_min = std::max(a.y_min, b.y_min);
  const int ix_max = std::min(a.x_max, b.x_max);
  const int iy_max = std::min(a.y_max, b.y_max);
  if (ix_min > ix_max || iy_min > iy_max) return 0.0;
  const double inter = double(ix_max - ix_min + 1) * (iy_max - iy_min + 1);
  const double uni = double(a.area()) + double(b.area()) - inter;
  return inter / uni;
}

namespace detail {

// Detections ranked by confidence descending; ties broken by image id, then
// by original insertion order.
inline std::vector<std::size_t> ranked_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].confidence != dets[b].confidence)
      return dets[a].confidence > dets[b].confidence;
    if (dets[a].image_id != dets[b].image_id)
      return dets[a].image_id < dets[b].image_id;
    return a < b;
  });
  return order;
}

}  // namespace detail

// Average precision for the single class at one IoU threshold.
// Greedy matching in rank order: each detection takes the unmatched ground
// truth box of its image with the highest IoU >= threshold. AP is the
// 101-point interpolated area under precision-recall. Conventions: no ground
// truth and no detections is a perfect 1; detections against an empty ground
// truth score 0.
inline double average_precision(const std::vector<Detection>& detections,
                                const GroundTruth& ground_truth,
                                double iou_threshold = 0.5) {
  std::int64_t n_gt = 0;
  for (const auto& [id, boxes] : ground_truth) n_gt += boxes.size();
  if (n_gt == 0) return detections.empty() ? 1.0 : 0.0;

  std::unordered_map<std::string, std::vector<bool>> matched;
  for (const auto& [id, boxes] : ground_truth)
    matched[id].assign(boxes.size(), false);

  const std::vector<std::size_t> order = detail::ranked_order(detections);
  std::vector<bool> is_tp(order.size(), false);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& d = detections[order[rank]];
    const auto git = ground_truth.find(d.image_id);
    if (git == ground_truth.end()) continue;
    const std::vector<BBox>& boxes = git->second;
    std::vector<bool>& used = matched[d.image_id];
    double best = 0.0;
    std::ptrdiff_t best_idx = -1;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (used[i]) continue;
      const double v = iou(d.bbox, boxes[i]);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_idx = static_cast<std::ptrdiff_t>(i);
      }
    }
    if (best_idx >= 0) {
      used[static_cast<std::size_t>(best_idx)] = true;
      is_tp[rank] = true;
    }
  }

  // Precision/recall after each rank, then 101-point interpolation.
  std::vector<double> recalls, precisions;
  std::int64_t tp = 0;
  for (std::size_t rank = 0; rank < is_tp.size(); ++rank) {
    if (is_tp[rank]) ++tp;
    recalls.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    precisions.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
  }
  double ap = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    double best_p = 0.0;
    for (std::size_t k = 0; k < recalls.size(); ++k)
      if (recalls[k] >= r) best_p = std::max(best_p, precisions[k]);
    ap += best_p;
  }
  return ap / 101.0;
}

enum class MapMode { iou50, coco };  // single threshold 0.5, or 0.5:0.95:0.05

inline double mean_average_precision(const std::vector<Detection>& detections,
                                     const GroundTruth& ground_truth,
                                     MapMode mode = MapMode::iou50) {
  if (mode == MapMode::iou50)
    return average_precision(detections, ground_truth, 0.5);
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < 10; ++i) {
    sum += average_precision(detections, ground_truth, 0.5 + 0.05 * i);
    ++n;
  }
  return sum / n;
}

// Ground truth boxes per image for a manifest subset. Images without ships
// appear with an empty box list so they still count toward evaluation.
inline GroundTruth ground_truth_from_manifest(
    const DatasetManifest& m, bool val_only = false) {
  GroundTruth gt;
  const bool have_split = !m.split.assignment.empty();
  const auto in_subset = [&](const std::string& id) {
    if (!val_only || !have_split) return true;
    const auto it = m.split.assignment.find(id);
    return it != m.split.assignment.end() && it->second == Split::val;
  };
  for (const AnnotationRecord& r : m.records) {
    if (!in_subset(r.image_id)) continue;
    auto& boxes = gt[r.image_id];
    if (!r.rle.empty())
      boxes.push_back(bbox_from_rle(r.rle, m.image_width, m.image_height));
  }
  return gt;
}

struct SubsetEval {
  double map_full = 0.0;
  double map_ship_only = 0.0;
  double delta = 0.0;
  std::int64_t n_images_full = 0;
  std::int64_t n_images_ship = 0;
  std::int64_t n_detections_full = 0;
  std::int64_t n_detections_ship = 0;
};

// mAP over all evaluated images versus the ship-only subset. Restricting to
// labeled images drops the false positives that ship-free images contribute,
// which can only help the ship-only figure.
inline SubsetEval eval_subsets(const DetectionSet& dets,
                               const DatasetManifest& m,
                               MapMode mode = MapMode::iou50) {
  const GroundTruth gt_full =
      ground_truth_from_manifest(m, /*val_only=*/true);
  const auto labels = labels_by_image(m);

  GroundTruth gt_ship;
  for (const auto& [id, boxes] : gt_full)
    if (labels.count(id) && labels.at(id) == 1) gt_ship[id] = boxes;

  std::vector<Detection> dets_full, dets_ship;
  for (const Detection& d : dets.detections) {
    if (!gt_full.count(d.image_id)) continue;
    dets_full.push_back(d);
    if (gt_ship.count(d.image_id)) dets_ship.push_back(d);
  }

  SubsetEval ev;
  ev.map_full = mean_average_precision(dets_full, gt_full, mode);
  ev.map_ship_only = mean_average_precision(dets_ship, gt_ship, mode);
  ev.delta = ev.map_ship_only - ev.map_full;
  ev.n_images_full = static_cast<std::int64_t>(gt_full.size());
  ev.n_images_ship = static_cast<std::int64_t>(gt_ship.size());
  ev.n_detections_full = static_cast<std::int64_t>(dets_full.size());
  ev.n_detections_ship = static_cast<std::int64_t>(dets_ship.size());
  return ev;
}

enum class ConfidenceModel { uniform, separated };

inline const char* to_string(ConfidenceModel c) {
  return c == ConfidenceModel::uniform ? "uniform" : "separated";
}

struct SynthDetectorParams {
  double tp_rate = 0.9;            // chance each true box is detected
  double fp_rate_shipfree = 0.0;   // chance of one false box on a ship-free image
  double fp_rate_ship = 0.0;       // chance of one false box on a ship image
  int jitter_px = 0;               // uniform corner jitter for true detections
  ConfidenceModel confidence_model = ConfidenceModel::separated;
};

// Stand-in detector: emits jittered copies of ground truth boxes and random
// false boxes at configured rates. Streams are seeded per image id, so
// output is independent of record order.
inline DetectionSet synthetic_detector(const DatasetManifest& m,
                                       std::uint64_t seed,
                                       const SynthDetectorParams& p) {
  for (double rate : {p.tp_rate, p.fp_rate_shipfree, p.fp_rate_ship})
    if (!(rate >= 0.0 && rate <= 1.0))
      fail(ErrorCategory::invalid_argument, "detector rates must lie in [0,1]");
  if (p.jitter_px < 0)
    fail(ErrorCategory::invalid_argument, "jitter must be >= 0");

  const GroundTruth gt = ground_truth_from_manifest(m, /*val_only=*/false);
  const int W = m.image_width, H = m.image_height;

  DetectionSet out;
  out.source = "synthetic";
  for (const auto& [id, boxes] : gt) {
    Rng rng(fnv1a64_salted(id, seed));
    const auto confidence = [&](bool true_positive) {
      const double u = rng.next_real();
      if (p.confidence_model == ConfidenceModel::uniform) return 0.05 + 0.9 * u;
      return true_positive ? 0.55 + 0.45 * u : 0.05 + 0.65 * u;
    };
    for (const BBox& b : boxes) {
      if (!rng.next_bool(p.tp_rate)) continue;
      BBox d = b;
      if (p.jitter_px > 0) {
        const auto j = [&] {
          return static_cast<int>(rng.next_int(-p.jitter_px, p.jitter_px));
        };
        d.x_min = std::clamp(b.x_min + j(), 0, W - 1);
        d.y_min = std::clamp(b.y_min + j(), 0, H - 1);
        d.x_max = std::clamp(b.x_max + j(), d.x_min, W - 1);
        d.y_max = std::clamp(b.y_max + j(), d.y_min, H - 1);
      }
      out.detections.push_back({id, d, confidence(true)});
    }
    const double fp_rate = boxes.empty() ? p.fp_rate_shipfree : p.fp_rate_ship;
    if (rng.next_bool(fp_rate)) {
      const int bw = 1 + static_cast<int>(rng.next_below(std::max(W / 8, 1)));
      const int bh = 1 + static_cast<int>(rng.next_below(std::max(H / 8, 1)));
      const int x0 = static_cast<int>(rng.next_below(W - bw + 1));
      const int y0 = static_cast<int>(rng.next_below(H - bh + 1));
      out.detections.push_back(
          {id, {x0, y0, x0 + bw - 1, y0 + bh - 1}, confidence(false)});
    }
  }
  return out;
}

// CSV columns image_id,x_min,y_min,x_max,y_max,confidence; strict, with the
// offending line number in every error.
inline DetectionSet parse_detections_csv(const std::string& content,
                                         int image_width = 768,
                                         int image_height = 768) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCategory::format, "empty detections file: missing header");
  const auto header = split_csv_line(line);
  const char* expected[] = {"imageid", "xmin", "ymin", "xmax", "ymax",
                            "confidence"};
  if (header.size() != 6)
    fail(ErrorCategory::format, "detections header must have 6 columns");
  for (int i = 0; i < 6; ++i)
    if (normalize_column_name(header[i]) != expected[i])
      fail(ErrorCategory::format,
           "unexpected detections column '" + header[i] + "'");

  DetectionSet out;
  out.source = "imported";
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
      fail(ErrorCategory::format, "line " + std::to_string(line_no) +
                                      ": expected 6 fields, got " +
                                      std::to_string(fields.size()));
    Detection d;
    d.image_id = fields[0];
    const auto geom = [&](const std::string& f) {
      return static_cast<int>(detail::parse_int_field(f, line_no));
    };
    d.bbox = {geom(fields[1]), geom(fields[2]), geom(fields[3]), geom(fields[4])};
    try {
      std::size_t used = 0;
      d.confidence = std::stod(fields[5], &used);
      if (used != fields[5].size()) throw std::invalid_argument(fields[5]);
    } catch (const std::exception&) {
      fail(ErrorCategory::format, "line " + std::to_string(line_no) +
                                      ": bad confidence '" + fields[5] + "'");
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      fail(ErrorCategory::format,
           "line " + std::to_string(line_no) + ": confidence outside [0,1]");
    try {
      d.bbox.validate(image_width, image_height);
    } catch (const Error&) {
      fail(ErrorCategory::format,
           "line " + std::to_string(line_no) + ": box outside image bounds");
    }
    out.detections.push_back(std::move(d));
  }
  return out;
}

inline DetectionSet import_detections(const std::string& path,
                                      int image_width = 768,
                                      int image_height = 768) {
  return parse_detections_csv(read_binary_file(path), image_width, image_height);
}

inline std::string detections_to_csv(const DetectionSet& dets) {
  std::ostringstream out;
  out << "image_id,x_min,y_min,x_max,y_max,confidence\n";
  out.precision(12);
  for (const Detection& d : dets.detections)
    out << d.image_id << ',' << d.bbox.x_min << ',' << d.bbox.y_min << ','
        << d.bbox.x_max << ',' << d.bbox.y_max << ',' << d.confidence << '\n';
  return out.str();
}

inline nlohmann::json eval_report_json(const SubsetEval& ev, MapMode mode) {
  return {{"map_mode", mode == MapMode::iou50 ? "iou50" : "coco_50_95"},
          {"map_full", ev.map_full},
          {"map_ship_only", ev.map_ship_only},
          {"delta", ev.delta},
          {"n_images_full", ev.n_images_full},
          {"n_images_ship_only", ev.n_images_ship},
          {"n_detections_full", ev.n_detections_full},
          {"n_detections_ship_only", ev.n_detections_ship}};
}

}  // namespace shipgate
