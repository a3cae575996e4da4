// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "edgecrack/graph.hpp"

namespace edgecrack {

struct FloatTensor;

/// real = scale * (q - zero_point), q in [-128, 127].
struct QuantParams {
  double scale = 1.0;
  std::int32_t zero_point = 0;

  bool operator==(const QuantParams&) const = default;
};

/// Fixed-point form of a positive real multiplier:
/// m ~= m0 * 2^-31 * 2^-shift with m0 in [2^30, 2^31).
struct RequantMultiplier {
  std::int32_t m0 = 1 << 30;
  std::int32_t shift = 0;

  double realized() const { return std::ldexp(static_cast<double>(m0), -31 - shift); }

  bool operator==(const RequantMultiplier&) const = default;
};

struct TensorRange {
  double min_val = 0.0;
  double max_val = 0.0;
  std::int64_t sample_count = 0;

  bool operator==(const TensorRange&) const = default;
};

using CalibrationStats = std::map<std::string, TensorRange>;

/// The fixed-point model: topology plus integer parameters. graph.weights is
/// empty; parameter data lives in weight_q / bias_q.
struct QuantizedModel {
  ModelGraph graph;
  std::map<std::string, std::vector<std::int8_t>> weight_q;
  std::map<std::string, std::vector<std::int32_t>> bias_q;
  std::map<std::string, QuantParams> act_qparams;
  std::map<std::string, QuantParams> weight_qparams;
  std::map<std::string, RequantMultiplier> requant;

  const QuantParams& input_qparams() const { return act_qparams.at(graph.input_id); }
  const QuantParams& output_qparams() const { return act_qparams.at(graph.output_id); }

  bool operator==(const QuantizedModel&) const = default;
};

inline constexpr std::int32_t kQMin = -128;
inline constexpr std::int32_t kQMax = 127;

/// Round half away from zero.
inline double round_half_away(double x) { return std::round(x); }

QuantParams compute_qparams(double min_val, double max_val);

std::int8_t quantize_value(double x, const QuantParams& p);

inline double dequantize_value(std::int32_t q, const QuantParams& p) {
  return p.scale * static_cast<double>(q - p.zero_point);
}

RequantMultiplier compute_requant(double real_multiplier);

/// round_half_away(acc * m0 * 2^(-31 - shift)), exact in 64-bit integer math.
std::int64_t apply_requant(std::int32_t acc, const RequantMultiplier& rq) noexcept;

/// Symmetric per-tensor params for a weight tensor: scale = max|w| / 127.
QuantParams symmetric_weight_qparams(std::span<const float> weights);

/// Runs the float model over every sample and records per-tensor min/max.
CalibrationStats collect_calibration_stats(const ModelGraph& model,
                                           std::span<const FloatTensor> samples);

/// Merges per-sample stats: elementwise min/max, summed sample counts.
void merge_stats(CalibrationStats& into, const CalibrationStats& other);

QuantizedModel quantize_model(const ModelGraph& model, const CalibrationStats& stats);

/// Structural invariants every QuantizedModel must satisfy before packing or
/// execution. Returns a list of human-readable problems; empty means valid.
std::vector<std::string> check_quantized_model(const QuantizedModel& qm);

/// Upper bound on |int32 accumulator| for a node, over all int8 inputs.
std::int64_t accumulator_bound(const QuantizedModel& qm, const NodeSpec& node);

}  // namespace edgecrack
