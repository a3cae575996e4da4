// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "edgecrack/image.hpp"
#include "edgecrack/quantize.hpp"
#include "edgecrack/runtime.hpp"

// Host-side stages around the device executor: resize/normalize going in,
// dequantize/softmax/argmax coming out, and per-stage timing.
namespace edgecrack {

inline constexpr int kModelInputSize = 224;

/// Bilinear resize with half-pixel centers and edge clamping. Returns
/// interpolated (unrounded) byte values as [1, height, width, channels].
FloatTensor resize_bilinear(const ImageBuffer& img, int width, int height);

/// 3-channel image -> [1, 224, 224, 3] in [0, 1]. Throws WrongChannelCount.
FloatTensor preprocess(const ImageBuffer& img);

struct Prediction {
  std::vector<double> probs;
  Label label = Label::Negative;
};

/// Numerically stable softmax over doubles.
std::vector<double> softmax(std::span<const double> logits);

/// Dequantize, softmax, argmax. Ties resolve to the lower class index.
Prediction postprocess(const RawOutput& raw);

/// Argmax over float logits or probabilities with the same tie rule.
Label argmax_label(std::span<const float> scores);

struct LatencyStats {
  std::size_t n = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  double pre_ms = 0.0;    // mean per stage
  double infer_ms = 0.0;
  double post_ms = 0.0;
};

struct StageTimes {
  double pre_ms = 0.0;
  double infer_ms = 0.0;
  double post_ms = 0.0;

  double total() const { return pre_ms + infer_ms + post_ms; }
};

/// Nearest-rank percentiles over per-sample totals. Throws EmptyBatch.
LatencyStats summarize_latency(std::span<const StageTimes> samples);

/// Times preprocess -> run_quant -> postprocess per image on one thread. The
/// first `warmup` images are run but not measured.
LatencyStats time_pipeline(const QuantizedModel& qm, std::span<const ImageBuffer> images, std::size_t warmup);

}  // namespace edgecrack
