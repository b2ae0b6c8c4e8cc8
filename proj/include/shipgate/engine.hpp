#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shipgate/events.hpp"
#include "shipgate/graph.hpp"
#include "shipgate/qtensor.hpp"

namespace shipgate {

// Linear per-layer cost model: energy = alpha * input_events + beta,
// latency = synaptic_ops / ops_per_ms. Declared constants, calibratable;
// nothing here claims hardware accuracy.
struct CostModel {
  double alpha_mj_per_event = 5.0e-5;
  double beta_mj = 1.0e-2;
  double ops_per_ms = 1.0e6;
};

// One row per processing stage. Plain convolutions, pooling and linear
// layers produce one row; separable convolutions produce a depthwise row
// ("sep_dw") and a pointwise row ("sep_pw") whose input is the requantized
// depthwise intermediate.
struct LayerStats {
  int layer_index = 0;
  std::string kind;
  std::int64_t input_events = 0;
  std::int64_t input_size = 0;
  double input_density = 0.0;
  std::int64_t synaptic_ops = 0;  // multiply-accumulates; bias adds excluded
  std::int64_t bias_adds = 0;
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

enum class ExecMode { dense, events };

struct ForwardResult {
  double logit = 0.0;
  double score = 0.0;  // sigmoid(logit)
  std::vector<QuantTensor> activations;   // output of every layer but the head
  std::vector<Accumulator> accumulators;  // one per stats row
  std::vector<LayerStats> stats;          // one per stage row
};

// max(0, acc) then unsigned requantization; the activation between layers.
inline QuantTensor relu_quant(const Accumulator& acc, double out_scale,
                              int out_bits) {
  if (!(out_scale > 0.0) || !std::isfinite(out_scale))
    fail(ErrorCategory::invalid_argument, "out_scale must be positive and finite");
  const std::int32_t qmax = quant_max(out_bits, Signedness::kUnsigned);
  QuantTensor q;
  q.shape = acc.shape;
  q.bit_width = out_bits;
  q.signedness = Signedness::kUnsigned;
  q.scale = out_scale;
  q.values.resize(acc.values.size());
  for (std::size_t i = 0; i < acc.values.size(); ++i) {
    const std::int32_t v = acc.values[i] > 0 ? acc.values[i] : 0;
    q.values[i] = requantize_value(v, acc.scale, out_scale, 0, qmax);
  }
  return q;
}

namespace detail {

struct StageOut {
  Accumulator acc;
  std::int64_t ops = 0;
};

// Regular or depthwise convolution over one input tensor.
//
// Dense mode gathers: every output position pulls all in-bounds taps, and
// every multiply-accumulate (including ones reading a zero) counts as one
// synaptic op. Event mode scatters: each non-zero input value pushes
// weight*value into every output position whose kernel footprint covers it,
// and only those MACs are counted. Zero padding never produces events, and
// the dense gather skips out-of-bounds taps, so both modes perform (and
// count against) exactly the same tap set; the integer sums are identical.
inline StageOut conv_stage(const LayerSpec& s, const QuantTensor& in,
                           ExecMode mode, bool depthwise) {
  const int k = s.kernel;
  const int st = s.stride;
  const int p = padding_of(s);
  const int in_ch = in.shape.channels;
  const int out_ch = depthwise ? in_ch : s.out_channels;
  const QuantTensor& w = s.weights;

  StageOut r;
  r.acc.shape = {out_ch, (in.shape.height + 2 * p - k) / st + 1,
                 (in.shape.width + 2 * p - k) / st + 1};
  r.acc.values.assign(r.acc.shape.size(), 0);
  r.acc.scale = in.scale * w.scale;
  const int oh = r.acc.shape.height;
  const int ow = r.acc.shape.width;

  const auto wat = [&](int o, int c, int ky, int kx) {
    return depthwise
               ? w.values[(static_cast<std::int64_t>(c) * k + ky) * k + kx]
               : w.values[((static_cast<std::int64_t>(o) * in_ch + c) * k + ky) *
                              k +
                          kx];
  };

  if (mode == ExecMode::dense) {
    for (int o = 0; o < out_ch; ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          std::int64_t sum = 0;
          const int c_lo = depthwise ? o : 0;
          const int c_hi = depthwise ? o + 1 : in_ch;
          for (int c = c_lo; c < c_hi; ++c)
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * st + ky - p;
              if (iy < 0 || iy >= in.shape.height) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * st + kx - p;
                if (ix < 0 || ix >= in.shape.width) continue;
                sum += static_cast<std::int64_t>(wat(o, c, ky, kx)) *
                       in.at(c, iy, ix);
                ++r.ops;
              }
            }
          r.acc.at(o, oy, ox) = static_cast<std::int32_t>(sum);
        }
  } else {
    const EventList ev = to_events(in);
    for (const Event& e : ev.events) {
      for (int ky = 0; ky < k; ++ky) {
        const int ny = e.row + p - ky;
        if (ny < 0 || ny % st != 0) continue;
        const int oy = ny / st;
        if (oy >= oh) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int nx = e.col + p - kx;
          if (nx < 0 || nx % st != 0) continue;
          const int ox = nx / st;
          if (ox >= ow) continue;
          if (depthwise) {
            r.acc.at(e.channel, oy, ox) +=
                wat(e.channel, e.channel, ky, kx) * e.value;
            ++r.ops;
          } else {
            for (int o = 0; o < out_ch; ++o) {
              r.acc.at(o, oy, ox) += wat(o, e.channel, ky, kx) * e.value;
              ++r.ops;
            }
          }
        }
      }
    }
  }
  return r;
}

// 1x1 pointwise stage of a separable layer; input is the requantized
// depthwise intermediate.
inline StageOut pointwise_stage(const LayerSpec& s, const QuantTensor& in,
                                ExecMode mode) {
  const int in_ch = in.shape.channels;
  const int out_ch = s.out_channels;
  const QuantTensor& w = s.pw_weights;

  StageOut r;
  r.acc.shape = {out_ch, in.shape.height, in.shape.width};
  r.acc.values.assign(r.acc.shape.size(), 0);
  r.acc.scale = in.scale * w.scale;

  const auto wat = [&](int o, int c) {
    return w.values[static_cast<std::int64_t>(o) * in_ch + c];
  };

  if (mode == ExecMode::dense) {
    for (int o = 0; o < out_ch; ++o)
      for (int y = 0; y < in.shape.height; ++y)
        for (int x = 0; x < in.shape.width; ++x) {
          std::int64_t sum = 0;
          for (int c = 0; c < in_ch; ++c) {
            sum += static_cast<std::int64_t>(wat(o, c)) * in.at(c, y, x);
            ++r.ops;
          }
          r.acc.at(o, y, x) = static_cast<std::int32_t>(sum);
        }
  } else {
    const EventList ev = to_events(in);
    for (const Event& e : ev.events)
      for (int o = 0; o < out_ch; ++o) {
        r.acc.at(o, e.row, e.col) += wat(o, e.channel) * e.value;
        ++r.ops;
      }
  }
  return r;
}

inline StageOut linear_stage(const LayerSpec& s, const QuantTensor& in,
                             ExecMode mode) {
  const std::int64_t n = in.size();
  const int out_ch = s.out_channels;
  const QuantTensor& w = s.weights;

  StageOut r;
  r.acc.shape = {out_ch, 1, 1};
  r.acc.values.assign(out_ch, 0);
  r.acc.scale = in.scale * w.scale;

  if (mode == ExecMode::dense) {
    for (int o = 0; o < out_ch; ++o) {
      std::int64_t sum = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        sum += static_cast<std::int64_t>(w.values[o * n + i]) * in.values[i];
        ++r.ops;
      }
      r.acc.values[o] = static_cast<std::int32_t>(sum);
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int32_t v = in.values[i];
      if (v == 0) continue;
      for (int o = 0; o < out_ch; ++o) {
        r.acc.values[o] += w.values[o * n + i] * v;
        ++r.ops;
      }
    }
  }
  return r;
}

// Global average pool. The accumulator holds per-channel sums; the output
// value is round_half_even(sum / positions) at the incoming scale and bits.
inline StageOut gap_stage(const QuantTensor& in, ExecMode mode) {
  StageOut r;
  r.acc.shape = {in.shape.channels, 1, 1};
  r.acc.values.assign(in.shape.channels, 0);
  r.acc.scale = in.scale;

  if (mode == ExecMode::dense) {
    for (int c = 0; c < in.shape.channels; ++c) {
      std::int64_t sum = 0;
      for (int y = 0; y < in.shape.height; ++y)
        for (int x = 0; x < in.shape.width; ++x) {
          sum += in.at(c, y, x);
          ++r.ops;
        }
      r.acc.values[c] = static_cast<std::int32_t>(sum);
    }
  } else {
    for (int c = 0; c < in.shape.channels; ++c)
      for (int y = 0; y < in.shape.height; ++y)
        for (int x = 0; x < in.shape.width; ++x) {
          const std::int32_t v = in.at(c, y, x);
          if (v == 0) continue;
          r.acc.values[c] += v;
          ++r.ops;
        }
  }
  return r;
}

inline void add_bias(Accumulator& acc, const LayerSpec& s,
                     std::int64_t& bias_adds) {
  if (!s.has_bias()) return;
  const std::vector<std::int32_t> eb = effective_bias(s, acc.scale);
  const std::int64_t plane = std::int64_t{acc.shape.height} * acc.shape.width;
  for (int o = 0; o < acc.shape.channels; ++o)
    for (std::int64_t i = 0; i < plane; ++i) {
      acc.values[o * plane + i] += eb[o];
      ++bias_adds;
    }
}

inline QuantTensor apply_activation(const LayerSpec& s, const Accumulator& acc) {
  if (s.activation == Activation::relu_quant)
    return relu_quant(acc, s.out_scale, s.out_bits);
  return requantize(acc, s.out_scale, s.out_bits, Signedness::kSigned);
}

}  // namespace detail

// Forward inference. Both modes run the same integer pipeline and differ
// only in how accumulators are populated (gather vs event scatter) and in
// how synaptic ops are counted (all in-bounds taps vs taps fired by events).
inline ForwardResult forward(const ModelGraph& g, const QuantTensor& input,
                             ExecMode mode, const CostModel& cost = {}) {
  validate_graph(g);
  input.validate();
  if (!(input.shape == g.input.shape))
    fail(ErrorCategory::validation, "input shape " + input.shape.str() +
                                        " does not match graph input " +
                                        g.input.shape.str());
  if (input.bit_width != g.input.bit_width ||
      input.signedness != g.input.signedness)
    fail(ErrorCategory::validation,
         "input quantization does not match graph input spec");

  ForwardResult r;
  QuantTensor cur = input;

  const auto push_stats = [&](int layer_index, const char* kind,
                              const QuantTensor& stage_in,
                              const detail::StageOut& st,
                              std::int64_t bias_adds) {
    LayerStats row;
    row.layer_index = layer_index;
    row.kind = kind;
    row.input_events = stage_in.nonzero_count();
    row.input_size = stage_in.size();
    row.input_density = stage_in.density();
    row.synaptic_ops = st.ops;
    row.bias_adds = bias_adds;
    row.latency_ms = static_cast<double>(st.ops) / cost.ops_per_ms;
    row.energy_mj = cost.alpha_mj_per_event * static_cast<double>(row.input_events) +
                    cost.beta_mj;
    r.stats.push_back(std::move(row));
    r.accumulators.push_back(st.acc);
  };

  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const LayerSpec& s = g.layers[i];
    const int li = static_cast<int>(i);
    const bool is_last = (i + 1 == g.layers.size());

    switch (s.kind) {
      case LayerKind::conv2d: {
        detail::StageOut st = detail::conv_stage(s, cur, mode, false);
        std::int64_t bias_adds = 0;
        detail::add_bias(st.acc, s, bias_adds);
        push_stats(li, "conv", cur, st, bias_adds);
        cur = detail::apply_activation(s, st.acc);
        break;
      }
      case LayerKind::separable_conv2d: {
        detail::StageOut dw = detail::conv_stage(s, cur, mode, true);
        push_stats(li, "sep_dw", cur, dw, 0);
        const QuantTensor inter = requantize(dw.acc, s.dw_out_scale,
                                             kDwIntermediateBits,
                                             Signedness::kSigned);
        detail::StageOut pw = detail::pointwise_stage(s, inter, mode);
        std::int64_t bias_adds = 0;
        detail::add_bias(pw.acc, s, bias_adds);
        push_stats(li, "sep_pw", inter, pw, bias_adds);
        cur = detail::apply_activation(s, pw.acc);
        break;
      }
      case LayerKind::linear: {
        detail::StageOut st = detail::linear_stage(s, cur, mode);
        std::int64_t bias_adds = 0;
        detail::add_bias(st.acc, s, bias_adds);
        push_stats(li, "linear", cur, st, bias_adds);
        if (is_last) {
          r.logit = static_cast<double>(st.acc.values[0]) * st.acc.scale;
        } else {
          cur = detail::apply_activation(s, st.acc);
        }
        break;
      }
      case LayerKind::global_avg_pool: {
        detail::StageOut st = detail::gap_stage(cur, mode);
        push_stats(li, "gap", cur, st, 0);
        const std::int64_t positions =
            std::int64_t{cur.shape.height} * cur.shape.width;
        QuantTensor pooled;
        pooled.shape = st.acc.shape;
        pooled.bit_width = cur.bit_width;
        pooled.signedness = cur.signedness;
        pooled.scale = cur.scale;
        pooled.values.resize(st.acc.values.size());
        for (std::size_t c = 0; c < pooled.values.size(); ++c)
          pooled.values[c] = static_cast<std::int32_t>(round_half_even(
              static_cast<double>(st.acc.values[c]) /
              static_cast<double>(positions)));
        cur = pooled;
        break;
      }
    }
    if (!is_last) r.activations.push_back(cur);
  }

  r.score = 1.0 / (1.0 + std::exp(-r.logit));
  return r;
}

inline ForwardResult forward_dense(const ModelGraph& g, const QuantTensor& in,
                                   const CostModel& cost = {}) {
  return forward(g, in, ExecMode::dense, cost);
}

inline ForwardResult forward_events(const ModelGraph& g, const QuantTensor& in,
                                    const CostModel& cost = {}) {
  return forward(g, in, ExecMode::events, cost);
}

// Arithmetic mean of per-row input densities; row 0 carries the input
// tensor's own density, so the mean includes the input.
inline double average_density(const std::vector<LayerStats>& stats) {
  if (stats.empty()) return 0.0;
  double sum = 0.0;
  for (const LayerStats& s : stats) sum += s.input_density;
  return sum / static_cast<double>(stats.size());
}

inline std::string stats_to_csv(const std::vector<LayerStats>& stats) {
  std::ostringstream out;
  out << "index,kind,events,density,ops,latency_ms,energy_mJ\n";
  out.precision(12);
  for (const LayerStats& s : stats)
    out << s.layer_index << ',' << s.kind << ',' << s.input_events << ','
        << s.input_density << ',' << s.synaptic_ops << ',' << s.latency_ms
        << ',' << s.energy_mj << '\n';
  return out.str();
}

inline nlohmann::json stats_to_json(const std::vector<LayerStats>& stats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const LayerStats& s : stats)
    rows.push_back({{"index", s.layer_index},
                    {"kind", s.kind},
                    {"events", s.input_events},
                    {"density", s.input_density},
                    {"ops", s.synaptic_ops},
                    {"bias_adds", s.bias_adds},
                    {"latency_ms", s.latency_ms},
                    {"energy_mJ", s.energy_mj}});
  return rows;
}

// Three aligned per-row series for plotting: cumulative latency by layer
// prefix, per-layer energy estimate, per-layer input density.
struct Breakdown {
  std::vector<std::string> kinds;
  std::vector<double> cumulative_latency_ms;
  std::vector<double> energy_mj;
  std::vector<double> input_density;
};

inline Breakdown layer_breakdown(const ModelGraph& g, const QuantTensor& input,
                                 const CostModel& cost = {}) {
  const ForwardResult r = forward(g, input, ExecMode::events, cost);
  Breakdown b;
  double cum = 0.0;
  for (const LayerStats& s : r.stats) {
    cum += s.latency_ms;
    b.kinds.push_back(s.kind);
    b.cumulative_latency_ms.push_back(cum);
    b.energy_mj.push_back(s.energy_mj);
    b.input_density.push_back(s.input_density);
  }
  return b;
}

inline std::string breakdown_to_csv(const Breakdown& b) {
  std::ostringstream out;
  out << "index,kind,cumulative_latency_ms,energy_mJ,input_density\n";
  out.precision(12);
  for (std::size_t i = 0; i < b.kinds.size(); ++i)
    out << i << ',' << b.kinds[i] << ',' << b.cumulative_latency_ms[i] << ','
        << b.energy_mj[i] << ',' << b.input_density[i] << '\n';
  return out.str();
}

}  // namespace shipgate
