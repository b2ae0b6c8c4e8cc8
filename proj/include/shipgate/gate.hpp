#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "shipgate/common.hpp"

namespace shipgate {

struct ScoredSample {
  double score = 0.0;
  int label = 0;  // 0 or 1
};

struct GateResult {
  std::string image_id;
  double score = 0.0;
  bool decision = false;
  double threshold = 0.5;
};

// Ties count as positive: threshold 0 means "flag everything".
inline GateResult gate_decision(std::string image_id, double score,
                                double threshold) {
  return {std::move(image_id), score, score >= threshold, threshold};
}

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::int64_t total() const { return tp + fp + tn + fn; }
};

struct GateMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double recall = 0.0;     // tp / (tp + fn); 1 when there are no positives
  double precision = 0.0;  // tp / (tp + fp); 1 when nothing is predicted positive
};

inline GateMetrics classify_metrics(std::span<const ScoredSample> samples,
                                    double threshold) {
  if (samples.empty())
    fail(ErrorCategory::invalid_argument, "no samples to evaluate");
  GateMetrics m;
  for (const ScoredSample& s : samples) {
    if (s.label != 0 && s.label != 1)
      fail(ErrorCategory::invalid_argument,
           "label must be 0 or 1, got " + std::to_string(s.label));
    if (!(s.score >= 0.0 && s.score <= 1.0))
      fail(ErrorCategory::invalid_argument, "score outside [0,1]");
    const bool predicted = s.score >= threshold;
    if (predicted && s.label == 1) ++m.counts.tp;
    else if (predicted && s.label == 0) ++m.counts.fp;
    else if (!predicted && s.label == 0) ++m.counts.tn;
    else ++m.counts.fn;
  }
  const auto& c = m.counts;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.recall = (c.tp + c.fn) == 0
                 ? 1.0
                 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.precision = (c.tp + c.fp) == 0
                    ? 1.0
                    : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  return m;
}

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

// One point per distinct score plus the endpoints 0 and 1, ascending.
// Recall is monotone non-increasing along the returned curve.
inline std::vector<PrPoint> sweep_thresholds(std::span<const ScoredSample> samples) {
  if (samples.empty())
    fail(ErrorCategory::invalid_argument, "no samples to sweep");
  std::set<double> thresholds{0.0, 1.0};
  for (const ScoredSample& s : samples) thresholds.insert(s.score);
  std::vector<PrPoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    const GateMetrics m = classify_metrics(samples, t);
    curve.push_back({t, m.recall, m.precision});
  }
  return curve;
}

inline std::string pr_curve_to_csv(const std::vector<PrPoint>& curve) {
  std::ostringstream out;
  out << "threshold,recall,precision\n";
  out.precision(12);
  for (const PrPoint& p : curve)
    out << p.threshold << ',' << p.recall << ',' << p.precision << '\n';
  return out.str();
}

struct FlaggedEstimate {
  std::int64_t count = 0;
  double fraction = 0.0;
};

// Expected number of images a gate with the given recall/precision flags:
// flagged = positives_found / precision = n * prevalence * recall / precision.
inline FlaggedEstimate flagged_fraction(std::int64_t n_total, double prevalence,
                                        double recall, double precision) {
  if (n_total <= 0)
    fail(ErrorCategory::invalid_argument, "n_total must be positive");
  for (double rate : {prevalence, recall, precision})
    if (!(rate > 0.0 && rate <= 1.0))
      fail(ErrorCategory::invalid_argument, "rates must lie in (0, 1]");
  FlaggedEstimate e;
  e.count = round_half_even(static_cast<double>(n_total) * prevalence * recall /
                            precision);
  e.fraction = static_cast<double>(e.count) / static_cast<double>(n_total);
  return e;
}

}  // namespace shipgate
