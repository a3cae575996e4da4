// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>

#include "edgecrack/host.hpp"
#include "edgecrack/image.hpp"

namespace edgecrack {

/// Positive = crack.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / total(); }
  void add(Label truth, Label predicted);

  bool operator==(const ConfusionMatrix&) const = default;
};

struct EvalReport {
  std::string model;
  std::string dataset;
  std::string timestamp;  // ISO-8601 UTC
  ConfusionMatrix matrix;
  double accuracy = 0.0;
  LatencyStats latency;
};

struct TimedPrediction {
  Prediction prediction;
  StageTimes times;
};

/// One sample through preprocess -> infer -> postprocess.
using PredictFn = std::function<TimedPrediction(const ImageBuffer&)>;

PredictFn make_quant_predictor(const QuantizedModel& qm);
/// Float model; applies softmax on the host if the graph has none.
PredictFn make_float_predictor(const ModelGraph& model);

struct EvalOptions {
  std::string model_name;
  std::string dataset_name;
  unsigned threads = 1;  // samples are split across threads; results do not depend on it
};

/// Throws EmptyDataset.
EvalReport evaluate(const PredictFn& predict, std::span<const LabeledSample> samples,
                    const EvalOptions& options = {});

std::string current_timestamp();

/// Report file (JSON); see docs/report-format.md.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace edgecrack
