// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "edgecrack/quantize.hpp"
#include "edgecrack/runtime.hpp"

namespace edgecrack {
namespace {

// Single Conv2D (+ Relu) layer on a size x size x in_c input.
ModelGraph conv_layer(int size, int in_c, int out_c, int k) {
  ModelGraph g;
  g.name = "conv";
  g.input_id = "x";
  g.tensors["x"] = {"x", {1, size, size, in_c}, DataType::F32};
  g.tensors["w"] = {"w", {out_c, k, k, in_c}, DataType::F32};
  g.tensors["b"] = {"b", {out_c}, DataType::F32};
  g.tensors["y"] = {"y", {}, DataType::F32};
  g.tensors["r"] = {"r", {}, DataType::F32};
  g.nodes.push_back({"conv", Conv2D{1, Padding::Same}, {"x", "w", "b"}, "y"});
  g.nodes.push_back({"relu", Relu{}, {"y"}, "r"});
  g.output_id = "r";
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  g.weights["w"].resize(static_cast<std::size_t>(out_c) * k * k * in_c);
  for (auto& v : g.weights["w"]) v = u(rng);
  g.weights["b"].assign(static_cast<std::size_t>(out_c), 0.1f);
  return infer_shapes(std::move(g));
}

FloatTensor random_tensor(const Shape& s) {
  FloatTensor t = make_tensor(s);
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : t.data) v = u(rng);
  return t;
}

void BM_ConvFloat(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  const ModelGraph g = conv_layer(size, channels, channels, 3);
  const FloatTensor x = random_tensor(g.tensors.at("x").shape);
  for (auto _ : state) benchmark::DoNotOptimize(run_float(g, x));
  state.SetItemsProcessed(state.iterations() * size * size * channels * channels * 9);
}
BENCHMARK(BM_ConvFloat)->Args({56, 8})->Args({112, 8})->Args({224, 3})->Unit(benchmark::kMillisecond);

void BM_ConvInt8(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  const ModelGraph g = conv_layer(size, channels, channels, 3);
  const FloatTensor x = random_tensor(g.tensors.at("x").shape);
  const std::vector<FloatTensor> calib{x};
  const QuantizedModel qm = quantize_model(g, collect_calibration_stats(g, calib));
  const Int8Tensor xq = quantize_tensor(x, qm.input_qparams());
  for (auto _ : state) benchmark::DoNotOptimize(run_quant_trace(qm, xq));
  state.SetItemsProcessed(state.iterations() * size * size * channels * channels * 9);
}
BENCHMARK(BM_ConvInt8)->Args({56, 8})->Args({112, 8})->Args({224, 3})->Unit(benchmark::kMillisecond);

void BM_ApplyRequant(benchmark::State& state) {
  const RequantMultiplier rq = compute_requant(0.0037);
  std::int32_t acc = -100000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_requant(acc, rq));
    acc += 7;
  }
}
BENCHMARK(BM_ApplyRequant);

}  // namespace
}  // namespace edgecrack
