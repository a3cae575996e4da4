// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "edgecrack/compat.hpp"
#include "edgecrack/host.hpp"
#include "edgecrack/reference_model.hpp"
#include "edgecrack/runtime.hpp"
#include "errc.hpp"
#include "test_support.hpp"

namespace edgecrack {
namespace {

using testing::ChainBuilder;
using testing::code_of;

TEST(RunFloat, ZeroWeightsGiveUniformSoftmax) {
  const std::vector<int> ch{2, 2, 2, 2, 2, 2};
  const ModelGraph g = build_reference_net(ch, 3);
  std::mt19937_64 rng(1);
  const FloatTensor out = run_float(g, testing::random_input(rng, g));
  ASSERT_EQ(out.data.size(), 2u);
  EXPECT_FLOAT_EQ(out.data[0], 0.5f);
  EXPECT_FLOAT_EQ(out.data[1], 0.5f);

  const ModelGraph logits = strip_unsupported_head(g, default_kl520_profile()).graph;
  EXPECT_EQ(run_float(logits, testing::random_input(rng, g)).data, (std::vector<float>{0.0f, 0.0f}));
}

TEST(RunFloat, IdentityPointwiseConv) {
  ModelGraph g = ChainBuilder("id", {1, 3, 4, 2}).conv(2, 1).build();
  auto& w = g.weights.at(g.nodes[0].weight());  // [out, 1, 1, in]
  w = {1.0f, 0.0f, 0.0f, 1.0f};
  std::mt19937_64 rng(2);
  const FloatTensor x = testing::random_input(rng, g, -5.0f, 5.0f);
  const FloatTensor y = run_float(g, x);
  EXPECT_EQ(y.shape, x.shape);
  EXPECT_EQ(y.data, x.data);
}

TEST(RunFloat, SoftmaxIsShiftInvariantAndStable) {
  ModelGraph g = ChainBuilder("s", {2}).softmax().build();
  FloatTensor x = make_tensor({2});
  x.data = {1000.0f, 1001.0f};
  const FloatTensor y = run_float(g, x);
  EXPECT_NEAR(y.data[0], 1.0 / (1.0 + std::exp(1.0)), 1e-6);
  EXPECT_NEAR(y.data[0] + y.data[1], 1.0, 1e-6);
}

TEST(RunFloat, MatchesBruteForceOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const ModelGraph g = testing::random_net(rng, {8, 4, true});
    const FloatTensor x = testing::random_input(rng, g, -1.0f, 1.0f);
    const FloatTensor y = run_float(g, x);
    const std::vector<double> ref = testing::oracle_float(g, x);
    ASSERT_EQ(y.data.size(), ref.size());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      EXPECT_NEAR(y.data[j], ref[j], 1e-5 * (1.0 + std::abs(ref[j]))) << "net " << i << " out " << j;
    }
  }
}

TEST(RunFloat, ObserverSeesEveryNode) {
  std::mt19937_64 rng(4);
  const ModelGraph g = testing::random_net(rng);
  std::vector<std::string> seen;
  run_float(g, testing::random_input(rng, g), [&](const NodeSpec& n, const FloatTensor& t) {
    seen.push_back(n.id);
    EXPECT_EQ(t.shape, g.tensors.at(n.output).shape);
  });
  ASSERT_EQ(seen.size(), g.nodes.size());
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], g.nodes[i].id);
}

TEST(RunFloat, WrongInputShape) {
  const ModelGraph g = ChainBuilder("d", {4}).dense(2).build();
  EXPECT_EQ(code_of([&] { run_float(g, make_tensor({5})); }), Errc::ShapeMismatch);
}

TEST(RunQuant, BitExactAgainstIntegerOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const ModelGraph g = testing::random_net(rng);
    const QuantizedModel qm = testing::quantize_random(rng, g);
    const Int8Tensor x = quantize_tensor(testing::random_input(rng, g, -0.2f, 1.2f), qm.input_qparams());
    const auto trace = run_quant_trace(qm, x);
    const std::vector<std::int8_t> ref = testing::oracle_int(qm, x.data);
    ASSERT_EQ(trace.at(qm.graph.output_id).data, ref) << "net " << i;
  }
}

TEST(RunQuant, RunQuantMatchesTraceOutput) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const ModelGraph g = testing::random_net(rng);
    const QuantizedModel qm = testing::quantize_random(rng, g);
    const FloatTensor x = testing::random_input(rng, g);
    const RawOutput raw = run_quant(qm, x);
    const auto trace = run_quant_trace(qm, quantize_tensor(x, qm.input_qparams()));
    EXPECT_EQ(raw.logits_q, trace.at(qm.graph.output_id).data);
    EXPECT_EQ(raw.qparams, qm.output_qparams());
    EXPECT_EQ(trace.size(), qm.graph.nodes.size() + 1);
  }
}

// Inputs the model was calibrated on, so nothing clips. Each requantizing
// layer rounds by half a step of its own scale; a later layer with a finer
// scale magnifies that in its own units, so the bound is stated against the
// coarsest activation scale in the network.
TEST(RunQuant, TracksFloatModelOnCalibrationInputs) {
  std::mt19937_64 rng(7);
  double worst_ratio = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ModelGraph g = testing::random_net(rng);
    std::vector<FloatTensor> inputs;
    for (int k = 0; k < 8; ++k) inputs.push_back(testing::random_input(rng, g));
    const QuantizedModel qm = quantize_model(g, collect_calibration_stats(g, inputs));
    const auto layers = std::count_if(g.nodes.begin(), g.nodes.end(),
                                      [](const NodeSpec& n) { return has_parameters(n.kind); });
    double coarsest = 0.0;
    for (const auto& [id, p] : qm.act_qparams) coarsest = std::max(coarsest, p.scale);
    double worst = 0.0;
    for (const FloatTensor& x : inputs) {
      const FloatTensor ref = run_float(g, x);
      const RawOutput raw = run_quant(qm, x);
      for (std::size_t j = 0; j < ref.data.size(); ++j) {
        worst = std::max(worst, std::abs(dequantize_value(raw.logits_q[j], raw.qparams) - ref.data[j]));
      }
    }
    const double ratio = worst / (coarsest * static_cast<double>(layers));
    EXPECT_LE(ratio, 1.0) << "net " << i << ": error " << worst << " with " << layers << " layers, coarsest scale "
                          << coarsest;
    worst_ratio = std::max(worst_ratio, ratio);
  }
  RecordProperty("worst_error_per_layer_in_coarsest_steps", std::to_string(worst_ratio));
}

TEST(RunQuant, HandComputedDense) {
  // x = {5, 10}, w = {1, -0.75}, b = 1  ->  y = -1.5
  ModelGraph g = ChainBuilder("hand", {2}).dense(1).build();
  const NodeSpec& node = g.nodes[0];
  QuantizedModel qm;
  qm.act_qparams[g.input_id] = {0.5, 0};
  qm.act_qparams[g.output_id] = {1.0, 0};
  qm.weight_qparams[node.weight()] = {0.25, 0};
  qm.weight_qparams[node.bias()] = {0.125, 0};
  qm.weight_q[node.weight()] = {4, -3};
  qm.bias_q[node.bias()] = {8};
  qm.requant[node.id] = compute_requant(0.125);
  g.weights.clear();
  for (auto& [id, t] : g.tensors) t.dtype = DataType::I8;
  g.tensors.at(node.bias()).dtype = DataType::I32;
  qm.graph = g;
  for (const auto& p : check_quantized_model(qm)) ADD_FAILURE() << p;
  EXPECT_EQ(qm.requant[node.id], (RequantMultiplier{1 << 30, 2}));

  // acc = 10*4 + 20*(-3) + 8 = -12; -12 * 0.125 = -1.5 rounds away to -2
  FloatTensor x = make_tensor({2});
  x.data = {5.0f, 10.0f};
  const RawOutput raw = run_quant(qm, x);
  EXPECT_EQ(raw.logits_q, (std::vector<std::int8_t>{-2}));
}

TEST(RunQuant, TinyModelByHand) {
  // input all 1.0 -> q 127, centered 255
  const QuantizedModel qm = testing::tiny_quantized_model();
  const auto trace = run_quant_trace(qm, Int8Tensor{{1, 2, 2, 1}, {127, 127, 127, 127}});
  const std::vector<std::int8_t> ref = testing::oracle_int(qm, {127, 127, 127, 127});
  EXPECT_EQ(trace.at(qm.graph.output_id).data, ref);
}

TEST(RunQuant, RefusesUnsupportedOps) {
  const ModelGraph g = ChainBuilder("s", {4}).dense(2).softmax().build();
  EXPECT_EQ(code_of([&] { require_int8_kernels(g); }), Errc::NotDeployable);
  QuantizedModel qm;
  qm.graph = g;
  EXPECT_EQ(code_of([&] { run_quant(qm, make_tensor({4})); }), Errc::NotDeployable);
}

TEST(RunQuant, WrongInputShape) {
  const QuantizedModel qm = testing::tiny_quantized_model();
  EXPECT_EQ(code_of([&] { run_quant(qm, make_tensor({1, 2, 3, 1})); }), Errc::ShapeMismatch);
}

TEST(RunQuant, DeterministicAcrossThreads) {
  std::mt19937_64 rng(8);
  const ModelGraph g = testing::random_net(rng, {16, 4, false});
  const QuantizedModel qm = testing::quantize_random(rng, g);
  std::vector<FloatTensor> inputs;
  std::vector<std::vector<std::int8_t>> serial;
  for (int i = 0; i < 16; ++i) {
    inputs.push_back(testing::random_input(rng, g));
    serial.push_back(run_quant(qm, inputs.back()).logits_q);
  }
  std::vector<std::vector<std::int8_t>> parallel(inputs.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = static_cast<std::size_t>(t); i < inputs.size(); i += 4) {
        parallel[i] = run_quant(qm, inputs[i]).logits_q;
      }
    });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(parallel, serial);
}

TEST(Tensors, QuantizeDequantize) {
  FloatTensor t = make_tensor({3});
  t.data = {0.0f, 1.0f, 100.0f};
  const QuantParams p{0.5, -10};
  const Int8Tensor q = quantize_tensor(t, p);
  EXPECT_EQ(q.data, (std::vector<std::int8_t>{-10, -8, 127}));
  EXPECT_EQ(dequantize_tensor(q, p).data, (std::vector<float>{0.0f, 1.0f, 68.5f}));
}

}  // namespace
}  // namespace edgecrack
