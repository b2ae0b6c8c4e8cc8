#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include <json.hpp>

#include "shipgate/common.hpp"

namespace shipgate {

// One pipeline stage: average power draw and sustained throughput.
// For the gate stage static and dynamic power are recorded separately;
// power_w is the figure used for energy accounting.
struct StageCost {
  std::string name;
  double power_w = 0.0;
  double throughput_fps = 0.0;
  double static_w = 0.0;
  double dynamic_w = 0.0;

  void validate() const {
    if (!(power_w > 0.0) || !std::isfinite(power_w))
      fail(ErrorCategory::invalid_argument, "stage power must be positive");
    if (!(throughput_fps > 0.0) || !std::isfinite(throughput_fps))
      fail(ErrorCategory::invalid_argument, "stage throughput must be positive");
  }
};

inline double per_image_energy_j(const StageCost& stage) {
  stage.validate();
  return stage.power_w / stage.throughput_fps;
}

inline double stage_energy_j(std::int64_t n_images, const StageCost& stage) {
  if (n_images < 0)
    fail(ErrorCategory::invalid_argument, "image count must be >= 0");
  stage.validate();
  return static_cast<double>(n_images) * stage.power_w / stage.throughput_fps;
}

inline double mwh_to_j(double mwh) { return mwh * 3.6; }
inline double j_to_mwh(double joules) { return joules / 3.6; }

// How the always-on share of gate power is charged.
//   paper_faithful: gate energy = total gate power over gate processing time.
//   duty_cycle:     dynamic power over gate processing time, plus static
//                   power over the whole wall clock including detector time.
enum class PowerMode { paper_faithful, duty_cycle };

struct CascadeEnergy {
  double gate_j = 0.0;
  double detector_j = 0.0;
  double total_j = 0.0;
};

inline CascadeEnergy cascade_energy(std::int64_t n_total, std::int64_t n_flagged,
                                    const StageCost& gate,
                                    const StageCost& detector,
                                    PowerMode mode = PowerMode::paper_faithful) {
  if (n_flagged < 0 || n_flagged > n_total)
    fail(ErrorCategory::invalid_argument,
         "flagged count must lie in [0, n_total]");
  gate.validate();
  detector.validate();
  CascadeEnergy e;
  if (mode == PowerMode::paper_faithful) {
    e.gate_j = stage_energy_j(n_total, gate);
  } else {
    const double gate_s = static_cast<double>(n_total) / gate.throughput_fps;
    const double det_s = static_cast<double>(n_flagged) / detector.throughput_fps;
    e.gate_j = gate.dynamic_w * gate_s + gate.static_w * (gate_s + det_s);
  }
  e.detector_j = stage_energy_j(n_flagged, detector);
  e.total_j = e.gate_j + e.detector_j;
  return e;
}

// Largest flagged fraction at which the cascade still beats running the
// detector on everything: f* = 1 - gate_per_image / detector_per_image.
// A non-positive result means the cascade never wins.
inline double break_even_flag_rate(const StageCost& gate,
                                   const StageCost& detector) {
  return 1.0 - per_image_energy_j(gate) / per_image_energy_j(detector);
}

// Least-squares line through (events, measured_mJ) points.
struct LayerEnergyFit {
  double alpha_mj_per_event = 0.0;
  double beta_mj = 0.0;
  double r_squared = 0.0;

  double predict_mj(double events) const {
    return alpha_mj_per_event * events + beta_mj;
  }
};

inline LayerEnergyFit fit_layer_energy(
    std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    fail(ErrorCategory::invalid_argument, "need at least two points to fit");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0)
    fail(ErrorCategory::invalid_argument,
         "singular fit: all event counts identical");
  LayerEnergyFit fit;
  fit.alpha_mj_per_event = sxy / sxx;
  fit.beta_mj = my - fit.alpha_mj_per_event * mx;
  double ss_res = 0, ss_tot = 0;
  for (const auto& [x, y] : points) {
    const double r = y - fit.predict_mj(x);
    ss_res += r * r;
    ss_tot += (y - my) * (y - my);
  }
  fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

inline nlohmann::json stage_to_json(const StageCost& s) {
  return {{"name", s.name},
          {"power_W", s.power_w},
          {"throughput_fps", s.throughput_fps},
          {"static_W", s.static_w},
          {"dynamic_W", s.dynamic_w}};
}

inline nlohmann::json energy_report(std::int64_t n_total, std::int64_t n_flagged,
                                    const StageCost& gate,
                                    const StageCost& detector,
                                    PowerMode mode = PowerMode::paper_faithful) {
  const CascadeEnergy c = cascade_energy(n_total, n_flagged, gate, detector, mode);
  const double detector_only_j = stage_energy_j(n_total, detector);
  const double f_star = break_even_flag_rate(gate, detector);
  nlohmann::json rep;
  rep["stages"] = {stage_to_json(gate), stage_to_json(detector)};
  rep["power_mode"] =
      mode == PowerMode::paper_faithful ? "paper_faithful" : "duty_cycle";
  rep["n_total"] = n_total;
  rep["n_flagged"] = n_flagged;
  rep["flagged_fraction"] =
      static_cast<double>(n_flagged) / static_cast<double>(n_total);
  rep["gate_J"] = c.gate_j;
  rep["detector_J"] = c.detector_j;
  rep["total_J"] = c.total_j;
  rep["detector_only_J"] = detector_only_j;
  rep["reduction_ratio"] = detector_only_j / c.total_j;
  rep["break_even_fraction"] = f_star;
  rep["cascade_never_wins"] = f_star <= 0.0;
  return rep;
}

}  // namespace shipgate
