// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit tests and the acceptance suite: a chain builder,
// random small networks, and brute-force reference executors written without
// reusing any library kernel.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "edgecrack/graph.hpp"
#include "edgecrack/quantize.hpp"
#include "edgecrack/runtime.hpp"

namespace edgecrack::testing {

class ChainBuilder {
 public:
  ChainBuilder(std::string name, Shape input_shape);

  ChainBuilder& conv(int out_c, int k, int stride = 1, Padding padding = Padding::Same);
  ChainBuilder& pool(int window = 2, int stride = 2);
  ChainBuilder& relu();
  ChainBuilder& flatten();
  ChainBuilder& dense(int out);
  ChainBuilder& softmax();

  /// Current output shape.
  const Shape& shape() const;
  ModelGraph build() const { return graph_; }

 private:
  std::string add(OpKind kind, std::vector<std::string> params);
  void param(const std::string& id, Shape shape);

  ModelGraph graph_;
  int counter_ = 0;
};

struct RandomNetOptions {
  int max_spatial = 8;
  int max_channels = 4;
  bool allow_softmax = false;
};

/// Random chain: 1-3 conv blocks (k 1..3, stride 1..2, Same/Valid, optional
/// Relu, optional pool), Flatten, Dense, optional Relu, Dense. Weights are
/// uniform and scaled by 1/sqrt(fan-in).
ModelGraph random_net(std::mt19937_64& rng, const RandomNetOptions& options = {});

/// Uniform [lo, hi] input matching the model input.
FloatTensor random_input(std::mt19937_64& rng, const ModelGraph& model, float lo = 0.0f, float hi = 1.0f);

/// Floor on calibrated range width in quantize_random. Random weights can
/// leave a ReLU output almost always zero; its measured range would then need
/// a requantization multiplier far outside the fixed-point limits.
inline constexpr double kMinCalibratedWidth = 0.05;

/// Quantize `model` with stats from `n` random inputs.
QuantizedModel quantize_random(std::mt19937_64& rng, const ModelGraph& model, int n = 4);

/// Float reference: direct nested loops, double accumulation.
std::vector<double> oracle_float(const ModelGraph& model, const FloatTensor& input);

/// Integer reference over int8 input, 64-bit accumulation and exact rational
/// rounding of the requantization product.
std::vector<std::int8_t> oracle_int(const QuantizedModel& qm, const std::vector<std::int8_t>& input);

/// Exact round-half-away-from-zero of acc * m0 / 2^(31 + shift).
std::int64_t oracle_requant(std::int64_t acc, std::int32_t m0, int shift);

/// Fresh, empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// Hand-written fixed QuantizedModel behind tests/data/tiny.enef.
QuantizedModel tiny_quantized_model();

/// Directory of checked-in test data.
std::filesystem::path data_dir();
std::filesystem::path docs_dir();

}  // namespace edgecrack::testing
