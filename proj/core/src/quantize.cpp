// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edgecrack/error.hpp"
#include "edgecrack/runtime.hpp"

namespace edgecrack {

QuantParams compute_qparams(double min_val, double max_val) {
  if (!std::isfinite(min_val) || !std::isfinite(max_val) || min_val > max_val) {
    throw Error(Errc::NonFiniteRange,
                "range [" + std::to_string(min_val) + ", " + std::to_string(max_val) + "]");
  }
  const double lo = std::min(min_val, 0.0);
  const double hi = std::max(max_val, 0.0);
  QuantParams p;
  p.scale = (hi == lo) ? 1.0 : (hi - lo) / 255.0;
  // The rounded offset of the range floor, not the floor itself, is moved to
  // -128, so (-1, 1) lands on zero_point 0.
  const double zp = static_cast<double>(kQMin) - round_half_away(lo / p.scale);
  p.zero_point = static_cast<std::int32_t>(std::clamp<double>(zp, kQMin, kQMax));
  return p;
}

std::int8_t quantize_value(double x, const QuantParams& p) {
  const double q = round_half_away(x / p.scale) + p.zero_point;
  return static_cast<std::int8_t>(std::clamp<double>(q, kQMin, kQMax));
}

RequantMultiplier compute_requant(double real_multiplier) {
  if (!(real_multiplier > std::ldexp(1.0, -40) && real_multiplier < std::ldexp(1.0, 8))) {
    throw Error(Errc::MultiplierOutOfRange, std::to_string(real_multiplier));
  }
  int exponent = 0;
  const double mantissa = std::frexp(real_multiplier, &exponent);  // [0.5, 1)
  auto m0 = static_cast<std::int64_t>(round_half_away(std::ldexp(mantissa, 31)));
  int shift = -exponent;
  if (m0 == (std::int64_t{1} << 31)) {
    m0 >>= 1;
    --shift;
  }
  if (shift < -8 || shift > 40) {
    throw Error(Errc::MultiplierOutOfRange, std::to_string(real_multiplier));
  }
  return RequantMultiplier{static_cast<std::int32_t>(m0), shift};
}

std::int64_t apply_requant(std::int32_t acc, const RequantMultiplier& rq) noexcept {
  const int total = 31 + rq.shift;
  const std::int64_t prod = static_cast<std::int64_t>(acc) * rq.m0;
  // |prod| <= 2^62, so anything shifted by 64 or more rounds to zero.
  if (total > 63) return 0;
  const std::uint64_t mag = prod < 0 ? static_cast<std::uint64_t>(-prod) : static_cast<std::uint64_t>(prod);
  const std::uint64_t rounded = (mag + (std::uint64_t{1} << (total - 1))) >> total;
  return prod < 0 ? -static_cast<std::int64_t>(rounded) : static_cast<std::int64_t>(rounded);
}

QuantParams symmetric_weight_qparams(std::span<const float> weights) {
  double peak = 0.0;
  for (float w : weights) peak = std::max(peak, std::abs(static_cast<double>(w)));
  return QuantParams{peak == 0.0 ? 1.0 : peak / 127.0, 0};
}

void merge_stats(CalibrationStats& into, const CalibrationStats& other) {
  for (const auto& [id, r] : other) {
    auto [it, inserted] = into.try_emplace(id, r);
    if (inserted) continue;
    it->second.min_val = std::min(it->second.min_val, r.min_val);
    it->second.max_val = std::max(it->second.max_val, r.max_val);
    it->second.sample_count += r.sample_count;
  }
}

namespace {

TensorRange range_of(const std::vector<float>& data) {
  TensorRange r{0.0, 0.0, 1};
  if (data.empty()) return r;
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  r.min_val = *lo;
  r.max_val = *hi;
  return r;
}

constexpr std::int64_t kMaxElements = std::int64_t{1} << 28;

bool is_passthrough(const OpKind& kind) {
  return std::holds_alternative<Relu>(kind) || std::holds_alternative<MaxPool2D>(kind) ||
         std::holds_alternative<Flatten>(kind);
}

}  // namespace

CalibrationStats collect_calibration_stats(const ModelGraph& model,
                                           std::span<const FloatTensor> samples) {
  if (samples.empty()) throw Error(Errc::EmptyCalibrationSet, "no calibration samples");
  CalibrationStats stats;
  for (const auto& sample : samples) {
    CalibrationStats one;
    one[model.input_id] = range_of(sample.data);
    run_float(model, sample, [&](const NodeSpec& node, const FloatTensor& t) {
      one[node.output] = range_of(t.data);
    });
    merge_stats(stats, one);
  }
  return stats;
}

QuantizedModel quantize_model(const ModelGraph& model, const CalibrationStats& stats) {
  auto stats_for = [&](const std::string& id) -> const TensorRange& {
    auto it = stats.find(id);
    if (it == stats.end()) throw Error(Errc::MissingStats, id);
    return it->second;
  };

  QuantizedModel qm;
  qm.graph = model;
  qm.graph.weights.clear();

  const auto& in_range = stats_for(model.input_id);
  qm.act_qparams[model.input_id] = compute_qparams(in_range.min_val, in_range.max_val);
  qm.graph.tensors.at(model.input_id).dtype = DataType::I8;

  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const NodeSpec& node = model.nodes[i];
    const QuantParams& in_p = qm.act_qparams.at(node.activation());
    QuantParams out_p;
    if (is_passthrough(node.kind)) {
      stats_for(node.output);
      out_p = in_p;
    } else {
      // A Conv2D/Dense feeding a Relu requantizes straight into the Relu's
      // range; the Relu then passes values through unchanged.
      const bool fused = has_parameters(node.kind) && i + 1 < model.nodes.size() &&
                         std::holds_alternative<Relu>(model.nodes[i + 1].kind);
      stats_for(node.output);
      const auto& r = fused ? stats_for(model.nodes[i + 1].output) : stats_for(node.output);
      out_p = compute_qparams(r.min_val, r.max_val);
    }
    qm.act_qparams[node.output] = out_p;
    qm.graph.tensors.at(node.output).dtype = DataType::I8;

    if (!has_parameters(node.kind)) continue;

    const auto& w = model.weights.at(node.weight());
    const auto& b = model.weights.at(node.bias());
    const QuantParams w_p = symmetric_weight_qparams(w);
    const QuantParams b_p{in_p.scale * w_p.scale, 0};

    std::vector<std::int8_t> wq(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) wq[k] = quantize_value(w[k], w_p);
    std::vector<std::int32_t> bq(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double v = round_half_away(static_cast<double>(b[k]) / b_p.scale);
      bq[k] = static_cast<std::int32_t>(std::clamp<double>(
          v, std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max()));
    }

    qm.weight_q[node.weight()] = std::move(wq);
    qm.bias_q[node.bias()] = std::move(bq);
    qm.weight_qparams[node.weight()] = w_p;
    qm.weight_qparams[node.bias()] = b_p;
    qm.graph.tensors.at(node.weight()).dtype = DataType::I8;
    qm.graph.tensors.at(node.bias()).dtype = DataType::I32;
    qm.requant[node.id] = compute_requant(in_p.scale * w_p.scale / out_p.scale);
  }
  return qm;
}

std::int64_t accumulator_bound(const QuantizedModel& qm, const NodeSpec& node) {
  if (!has_parameters(node.kind)) return 0;
  const Shape& w_shape = qm.graph.tensor(node.weight()).shape;
  const std::int64_t fan_in = element_count(w_shape) / std::max<std::int64_t>(w_shape.at(0), 1);
  std::int64_t w_peak = 0;
  for (auto v : qm.weight_q.at(node.weight())) w_peak = std::max<std::int64_t>(w_peak, std::abs(v));
  std::int64_t b_peak = 0;
  for (auto v : qm.bias_q.at(node.bias())) {
    b_peak = std::max<std::int64_t>(b_peak, std::abs(static_cast<std::int64_t>(v)));
  }
  return fan_in * 255 * w_peak + b_peak;
}

std::vector<std::string> check_quantized_model(const QuantizedModel& qm) {
  std::vector<std::string> problems;
  auto fail = [&](std::string what) { problems.push_back(std::move(what)); };
  const ModelGraph& g = qm.graph;

  for (const auto& v : validate_graph(g, /*require_weight_data=*/false)) {
    fail("graph: " + v.node_id + ": " + std::string(to_string(v.code)) + " " + v.detail);
  }
  if (!problems.empty()) return problems;
  if (!g.weights.empty()) fail("quantized graph still carries float weights");

  for (const auto& [id, t] : g.tensors) {
    if (t.shape.empty()) fail("tensor '" + id + "' has no shape");
    std::int64_t n = 1;
    for (auto d : t.shape) {
      if (d < 1 || d > kMaxElements || (n *= d) > kMaxElements) {
        fail("tensor '" + id + "' has a bad shape");
        break;
      }
    }
  }
  if (!problems.empty()) return problems;
  try {
    if (infer_shapes(g) != g) fail("declared shapes disagree with shape inference");
  } catch (const Error& e) {
    fail(std::string("shape inference failed: ") + e.what());
  }
  if (!problems.empty()) return problems;

  auto check_act = [&](const std::string& id) -> const QuantParams* {
    auto it = qm.act_qparams.find(id);
    if (it == qm.act_qparams.end()) {
      fail("no activation qparams for '" + id + "'");
      return nullptr;
    }
    const auto& p = it->second;
    if (!(p.scale > 0.0) || !std::isfinite(p.scale) || p.zero_point < kQMin || p.zero_point > kQMax) {
      fail("activation qparams for '" + id + "' out of range");
    }
    if (g.tensor(id).dtype != DataType::I8) fail("activation '" + id + "' is not I8");
    return &p;
  };

  check_act(g.input_id);
  std::size_t param_nodes = 0;
  for (const auto& node : g.nodes) {
    const QuantParams* in_p = check_act(node.activation());
    const QuantParams* out_p = check_act(node.output);
    if (is_passthrough(node.kind) && in_p && out_p && !(*in_p == *out_p)) {
      fail("node '" + node.id + "' must keep its input qparams");
    }
    if (!has_parameters(node.kind)) continue;
    ++param_nodes;

    const auto& w_spec = g.tensor(node.weight());
    const auto& b_spec = g.tensor(node.bias());
    auto wq = qm.weight_q.find(node.weight());
    auto bq = qm.bias_q.find(node.bias());
    auto wp = qm.weight_qparams.find(node.weight());
    auto bp = qm.weight_qparams.find(node.bias());
    auto rq = qm.requant.find(node.id);
    if (wq == qm.weight_q.end() || bq == qm.bias_q.end() || wp == qm.weight_qparams.end() ||
        bp == qm.weight_qparams.end() || rq == qm.requant.end()) {
      fail("node '" + node.id + "' is missing weight/bias/requant entries");
      continue;
    }
    if (static_cast<std::int64_t>(wq->second.size()) != element_count(w_spec.shape) ||
        static_cast<std::int64_t>(bq->second.size()) != element_count(b_spec.shape)) {
      fail("node '" + node.id + "' parameter length disagrees with its shape");
      continue;
    }
    if (w_spec.dtype != DataType::I8 || b_spec.dtype != DataType::I32) {
      fail("node '" + node.id + "' parameter dtypes must be I8/I32");
    }
    if (wp->second.zero_point != 0 || !(wp->second.scale > 0.0) || !std::isfinite(wp->second.scale)) {
      fail("weight qparams of '" + node.weight() + "' must be symmetric with a positive scale");
    }
    if (in_p && (bp->second.zero_point != 0 || bp->second.scale != in_p->scale * wp->second.scale)) {
      fail("bias '" + node.bias() + "' must sit at input_scale * weight_scale");
    }
    const auto& m = rq->second;
    if (m.m0 < (1 << 30) || m.shift < -8 || m.shift > 40) {
      fail("requant multiplier of '" + node.id + "' out of range");
    }
    if (accumulator_bound(qm, node) > std::numeric_limits<std::int32_t>::max()) {
      fail("node '" + node.id + "' can overflow its int32 accumulator");
    }
  }
  if (qm.weight_q.size() != param_nodes || qm.bias_q.size() != param_nodes ||
      qm.requant.size() != param_nodes || qm.weight_qparams.size() != 2 * param_nodes) {
    fail("parameter tables hold entries for tensors outside the graph");
  }
  if (qm.act_qparams.size() != g.nodes.size() + 1) {
    fail("activation qparams table holds entries for tensors outside the graph");
  }
  return problems;
}

}  // namespace edgecrack
