// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "edgecrack/compat.hpp"
#include "edgecrack/enef.hpp"
#include "edgecrack/host.hpp"
#include "edgecrack/reference_model.hpp"
#include "edgecrack/synth.hpp"

namespace edgecrack {
namespace {

struct Fixture {
  ModelGraph model;
  QuantizedModel qm;
  ImageBuffer image;

  Fixture() {
    model = strip_unsupported_head(build_handcrafted_model(), default_kl520_profile()).graph;
    SynthConfig cfg;
    cfg.n_per_class = 8;
    std::vector<FloatTensor> calib;
    for (const auto& s : synth_samples(cfg)) calib.push_back(preprocess(s.image));
    qm = quantize_model(model, collect_calibration_stats(model, calib));
    image = synth_image(cfg, Label::Positive, 0);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Preprocess(benchmark::State& state) {
  const ImageBuffer& img = fixture().image;
  for (auto _ : state) benchmark::DoNotOptimize(preprocess(img));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

void BM_RunFloatHandcrafted(benchmark::State& state) {
  const FloatTensor x = preprocess(fixture().image);
  for (auto _ : state) benchmark::DoNotOptimize(run_float(fixture().model, x));
}
BENCHMARK(BM_RunFloatHandcrafted)->Unit(benchmark::kMillisecond);

void BM_RunQuantHandcrafted(benchmark::State& state) {
  const FloatTensor x = preprocess(fixture().image);
  for (auto _ : state) benchmark::DoNotOptimize(run_quant(fixture().qm, x));
}
BENCHMARK(BM_RunQuantHandcrafted)->Unit(benchmark::kMillisecond);

void BM_EndToEnd(benchmark::State& state) {
  for (auto _ : state) {
    const RawOutput raw = run_quant(fixture().qm, preprocess(fixture().image));
    benchmark::DoNotOptimize(postprocess(raw));
  }
}
BENCHMARK(BM_EndToEnd)->Unit(benchmark::kMillisecond);

void BM_EnefPack(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enef::pack(fixture().qm, {"crack_cnn_handcrafted", "kneron-kl520"}));
}
BENCHMARK(BM_EnefPack);

void BM_EnefUnpack(benchmark::State& state) {
  const auto bytes = enef::pack(fixture().qm, {"crack_cnn_handcrafted", "kneron-kl520"});
  for (auto _ : state) benchmark::DoNotOptimize(enef::unpack(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_EnefUnpack);

}  // namespace
}  // namespace edgecrack
