// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "edgecrack/compat.hpp"
#include "edgecrack/host.hpp"
#include "edgecrack/passes.hpp"
#include "edgecrack/quantize.hpp"
#include "edgecrack/reference_model.hpp"
#include "edgecrack/synth.hpp"
#include "errc.hpp"
#include "test_support.hpp"

namespace edgecrack {
namespace {

using testing::ChainBuilder;
using testing::code_of;

TEST(QParams, SymmetricUnitRange) {
  const QuantParams p = compute_qparams(-1.0, 1.0);
  EXPECT_DOUBLE_EQ(p.scale, 2.0 / 255.0);
  EXPECT_EQ(p.zero_point, 0);
}

TEST(QParams, DegenerateZeroRange) {
  const QuantParams p = compute_qparams(0.0, 0.0);
  EXPECT_EQ(p.scale, 1.0);
  EXPECT_EQ(p.zero_point, -128);
}

TEST(QParams, NonNegativeRange) {
  const QuantParams p = compute_qparams(0.0, 2.55);
  EXPECT_NEAR(p.scale, 0.01, 1e-15);
  EXPECT_EQ(p.zero_point, -128);
}

TEST(QParams, RangeWidenedToIncludeZero) {
  const QuantParams pos = compute_qparams(1.0, 2.55);
  EXPECT_NEAR(pos.scale, 0.01, 1e-15);
  EXPECT_EQ(pos.zero_point, -128);
  const QuantParams neg = compute_qparams(-2.55, -1.0);
  EXPECT_NEAR(neg.scale, 0.01, 1e-15);
  EXPECT_EQ(neg.zero_point, 127);
  EXPECT_EQ(quantize_value(0.0, neg), 127);
}

TEST(QParams, ZeroIsExactlyRepresentable) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const QuantParams p = compute_qparams(a, b);
    EXPECT_GT(p.scale, 0.0);
    EXPECT_GE(p.zero_point, -128);
    EXPECT_LE(p.zero_point, 127);
    EXPECT_EQ(dequantize_value(quantize_value(0.0, p), p), 0.0);
  }
}

TEST(QParams, NonFinite) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { compute_qparams(-inf, 1.0); }), Errc::NonFiniteRange);
  EXPECT_EQ(code_of([&] { compute_qparams(0.0, std::nan("")); }), Errc::NonFiniteRange);
  EXPECT_EQ(code_of([&] { compute_qparams(2.0, 1.0); }), Errc::NonFiniteRange);
}

TEST(QuantizeValue, ZeroMapsToZeroPoint) {
  const QuantParams p{0.05, -17};
  EXPECT_EQ(quantize_value(0.0, p), -17);
}

TEST(QuantizeValue, ClampsAtTop) {
  const QuantParams p{0.05, -17};
  EXPECT_EQ(quantize_value(0.05 * (127 + 17), p), 127);
  EXPECT_EQ(quantize_value(1e9, p), 127);
  EXPECT_EQ(quantize_value(-1e9, p), -128);
}

TEST(QuantizeValue, HalfAwayFromZero) {
  const QuantParams p{1.0, 0};
  EXPECT_EQ(quantize_value(2.5, p), 3);
  EXPECT_EQ(quantize_value(-2.5, p), -3);
  EXPECT_EQ(quantize_value(0.5, p), 1);
  EXPECT_EQ(quantize_value(-0.5, p), -1);
}

TEST(QuantizeValue, RoundTripWithinHalfScale) {
  for (const auto& [lo, hi] : {std::pair{-1.0, 1.0}, {0.0, 6.0}, {-3.3, 0.7}, {-0.01, 100.0}}) {
    const QuantParams p = compute_qparams(lo, hi);
    const double top = p.scale * (127 - p.zero_point);
    const double bottom = p.scale * (-128 - p.zero_point);
    for (int i = 0; i <= 20000; ++i) {
      const double x = bottom + (top - bottom) * i / 20000.0;
      EXPECT_LE(std::abs(dequantize_value(quantize_value(x, p), p) - x), p.scale / 2 + 1e-12) << x;
    }
  }
}

TEST(Requant, Examples) {
  const RequantMultiplier half = compute_requant(0.5);
  EXPECT_EQ(half.m0, 1 << 30);
  EXPECT_EQ(half.shift, 0);
  const RequantMultiplier quarter = compute_requant(0.25);
  EXPECT_EQ(quarter.m0, 1 << 30);
  EXPECT_EQ(quarter.shift, 1);
  const RequantMultiplier one = compute_requant(1.0);
  EXPECT_EQ(one.m0, 1 << 30);
  EXPECT_EQ(one.shift, -1);
}

TEST(Requant, OutOfRange) {
  for (double m : {0.0, -1.0, std::ldexp(1.0, -41), 256.0, 1e9}) {
    EXPECT_EQ(code_of([&] { compute_requant(m); }), Errc::MultiplierOutOfRange) << m;
  }
}

TEST(Requant, RoundingUpToTwoToThe31Renormalizes) {
  const double m = std::nextafter(1.0, 0.0);  // mantissa rounds to 2^31
  const RequantMultiplier r = compute_requant(m);
  EXPECT_EQ(r.m0, 1 << 30);
  EXPECT_EQ(r.shift, -1);
  EXPECT_LE(std::abs(r.realized() - m) / m, std::ldexp(1.0, -30));
}

TEST(Requant, RelativeErrorSweep) {
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double m = std::exp2(-16.0 + 20.0 * i / (n - 1));
    const RequantMultiplier r = compute_requant(m);
    EXPECT_GE(r.m0, 1 << 30);
    const double realized = std::ldexp(static_cast<double>(r.m0), -31 - r.shift);
    ASSERT_LE(std::abs(realized - m) / m, std::ldexp(1.0, -30)) << m;
  }
}

TEST(Requant, ApplyMatchesExactRounding) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200000; ++i) {
    const auto acc = static_cast<std::int32_t>(rng());
    const auto m0 = static_cast<std::int32_t>((1u << 30) + (rng() % (1u << 30)));
    const int shift = -8 + static_cast<int>(rng() % 49);
    ASSERT_EQ(apply_requant(acc, {m0, shift}), testing::oracle_requant(acc, m0, shift))
        << acc << " " << m0 << " " << shift;
  }
  // ties round away from zero: 3 * 0.5 = 1.5 -> 2, -1.5 -> -2
  EXPECT_EQ(apply_requant(3, compute_requant(0.5)), 2);
  EXPECT_EQ(apply_requant(-3, compute_requant(0.5)), -2);
  EXPECT_EQ(apply_requant(std::numeric_limits<std::int32_t>::min(), {std::numeric_limits<std::int32_t>::max(), -8}),
            testing::oracle_requant(std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max(), -8));
}

TEST(WeightQParams, SymmetricAndZeroSafe) {
  const std::vector<float> w{0.5f, -1.27f, 0.0f};
  const QuantParams p = symmetric_weight_qparams(w);
  EXPECT_DOUBLE_EQ(p.scale, static_cast<double>(1.27f) / 127.0);
  EXPECT_EQ(p.zero_point, 0);
  const std::vector<float> zeros(5, 0.0f);
  EXPECT_EQ(symmetric_weight_qparams(zeros).scale, 1.0);
}

TEST(WeightQParams, DequantErrorWithinHalfScale) {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n(0.0f, 0.3f);
  std::vector<float> w(5000);
  for (auto& v : w) v = n(rng);
  const QuantParams p = symmetric_weight_qparams(w);
  for (float v : w) EXPECT_LE(std::abs(dequantize_value(quantize_value(v, p), p) - v), p.scale / 2 + 1e-9);
}

TEST(Calibration, ZeroModelZeroInput) {
  const ModelGraph g = ChainBuilder("z", {1, 3, 3, 2}).conv(2, 3).relu().flatten().dense(2).build();
  const std::vector<FloatTensor> xs{make_tensor(g.input().shape)};
  const CalibrationStats s = collect_calibration_stats(g, xs);
  EXPECT_EQ(s.size(), g.nodes.size() + 1);
  for (const auto& [id, r] : s) {
    EXPECT_EQ(r.min_val, 0.0) << id;
    EXPECT_EQ(r.max_val, 0.0) << id;
    EXPECT_EQ(r.sample_count, 1);
  }
}

TEST(Calibration, TwoSamplesComposeByMinMax) {
  std::mt19937_64 rng(13);
  const ModelGraph g = testing::random_net(rng);
  const FloatTensor a = testing::random_input(rng, g, -1.0f, 1.0f);
  const FloatTensor b = testing::random_input(rng, g, -1.0f, 1.0f);
  const std::vector<FloatTensor> both{a, b};
  const std::vector<FloatTensor> only_a{a};
  const std::vector<FloatTensor> only_b{b};
  CalibrationStats merged = collect_calibration_stats(g, only_a);
  merge_stats(merged, collect_calibration_stats(g, only_b));
  const CalibrationStats joint = collect_calibration_stats(g, both);
  ASSERT_EQ(merged.size(), joint.size());
  for (const auto& [id, r] : joint) {
    EXPECT_EQ(r.min_val, merged.at(id).min_val);
    EXPECT_EQ(r.max_val, merged.at(id).max_val);
    EXPECT_EQ(r.sample_count, 2);
  }
}

TEST(Calibration, SyntheticImagesStayInUnitRange) {
  SynthConfig cfg;
  cfg.n_per_class = 16;
  const ModelGraph g = build_handcrafted_model();
  std::vector<FloatTensor> xs;
  for (const auto& s : synth_samples(cfg)) xs.push_back(preprocess(s.image));
  const CalibrationStats st = collect_calibration_stats(g, xs);
  EXPECT_GE(st.at(g.input_id).min_val, 0.0);
  EXPECT_LE(st.at(g.input_id).max_val, 1.0);
  EXPECT_EQ(st.at(g.input_id).sample_count, 32);
  for (const auto& [id, r] : st) EXPECT_LE(r.min_val, r.max_val) << id;
}

TEST(Calibration, Empty) {
  const ModelGraph g = ChainBuilder("z", {2}).relu().build();
  EXPECT_EQ(code_of([&] { collect_calibration_stats(g, {}); }), Errc::EmptyCalibrationSet);
}

TEST(QuantizeModel, AllZeroWeights) {
  const ModelGraph g = ChainBuilder("z", {1, 4, 4, 2}).conv(3, 3).relu().flatten().dense(2).build();
  std::mt19937_64 rng(1);
  const QuantizedModel qm = testing::quantize_random(rng, g);
  for (const auto& [id, p] : qm.weight_qparams) {
    if (qm.weight_q.contains(id)) {
      EXPECT_EQ(p.scale, 1.0) << id;
      for (auto v : qm.weight_q.at(id)) EXPECT_EQ(v, 0);
    }
  }
  EXPECT_TRUE(check_quantized_model(qm).empty());
}

TEST(QuantizeModel, IdentityLikeDenseRequantEqualsWeightScale) {
  ModelGraph g = ChainBuilder("id", {4}).dense(4).build();
  auto& w = g.weights.at(g.nodes[0].weight());
  for (int i = 0; i < 4; ++i) w[i * 4 + i] = 1.0f;
  CalibrationStats stats;
  stats[g.input_id] = {-1.0, 1.0, 1};
  stats[g.output_id] = {-1.0, 1.0, 1};
  const QuantizedModel qm = quantize_model(g, stats);
  const double w_scale = qm.weight_qparams.at(g.nodes[0].weight()).scale;
  EXPECT_DOUBLE_EQ(w_scale, 1.0 / 127.0);
  const RequantMultiplier r = qm.requant.at(g.nodes[0].id);
  EXPECT_LE(std::abs(r.realized() - w_scale) / w_scale, std::ldexp(1.0, -30));
}

TEST(QuantizeModel, BiasAtProductScale) {
  std::mt19937_64 rng(5);
  const ModelGraph g = testing::random_net(rng);
  const QuantizedModel qm = testing::quantize_random(rng, g);
  for (const auto& node : g.nodes) {
    if (!has_parameters(node.kind)) continue;
    const double expect = qm.act_qparams.at(node.activation()).scale * qm.weight_qparams.at(node.weight()).scale;
    EXPECT_EQ(qm.weight_qparams.at(node.bias()).scale, expect);
    EXPECT_EQ(qm.weight_qparams.at(node.bias()).zero_point, 0);
    const auto& b = g.weights.at(node.bias());
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(qm.bias_q.at(node.bias())[i], static_cast<std::int32_t>(std::round(b[i] / expect)));
    }
  }
}

TEST(QuantizeModel, HandcraftedModelSatisfiesInvariants) {
  SynthConfig cfg;
  cfg.n_per_class = 8;
  const ModelGraph g = strip_unsupported_head(build_handcrafted_model(), default_kl520_profile()).graph;
  std::vector<FloatTensor> xs;
  for (const auto& s : synth_samples(cfg)) xs.push_back(preprocess(s.image));
  const QuantizedModel qm = quantize_model(g, collect_calibration_stats(g, xs));
  EXPECT_TRUE(check_quantized_model(qm).empty());
  for (const auto& node : g.nodes) {
    if (!has_parameters(node.kind)) continue;
    EXPECT_TRUE(qm.weight_q.contains(node.weight()));
    EXPECT_TRUE(qm.bias_q.contains(node.bias()));
    EXPECT_TRUE(qm.requant.contains(node.id));
  }
}

TEST(QuantizeModel, RandomNetsSatisfyInvariants) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const QuantizedModel qm = testing::quantize_random(rng, testing::random_net(rng));
    const auto problems = check_quantized_model(qm);
    EXPECT_TRUE(problems.empty()) << problems.front();
  }
}

TEST(QuantizeModel, MissingStats) {
  const ModelGraph g = ChainBuilder("m", {4}).dense(2).relu().build();
  CalibrationStats stats;
  stats[g.input_id] = {0.0, 1.0, 1};
  EXPECT_EQ(code_of([&] { quantize_model(g, stats); }), Errc::MissingStats);
}

TEST(QuantizeModel, PruneClusterQuantizeOrder) {
  const std::vector<int> ch{4, 4, 8, 8, 8, 8};
  ModelGraph g = build_reference_net(ch, 16);
  std::mt19937_64 rng(7);
  std::normal_distribution<float> n(0.0f, 0.2f);
  for (auto& [id, w] : g.weights) {
    for (auto& v : w) v = n(rng);
  }
  g = strip_unsupported_head(g, default_kl520_profile()).graph;
  g = cluster_weights(prune_magnitude(g, 0.5), 8, 30);
  std::vector<FloatTensor> xs;
  for (int i = 0; i < 2; ++i) xs.push_back(testing::random_input(rng, g));
  const QuantizedModel qm = quantize_model(g, collect_calibration_stats(g, xs));
  EXPECT_TRUE(check_quantized_model(qm).empty());
}

TEST(CheckQuantized, DetectsBrokenTables) {
  std::mt19937_64 rng(9);
  const QuantizedModel good = testing::quantize_random(rng, testing::random_net(rng));
  ASSERT_TRUE(check_quantized_model(good).empty());

  QuantizedModel a = good;
  a.requant.erase(a.requant.begin());
  EXPECT_FALSE(check_quantized_model(a).empty());

  QuantizedModel b = good;
  b.weight_q.begin()->second.pop_back();
  EXPECT_FALSE(check_quantized_model(b).empty());

  QuantizedModel c = good;
  c.act_qparams.begin()->second.zero_point = 300;
  EXPECT_FALSE(check_quantized_model(c).empty());

  QuantizedModel d = good;
  d.requant.begin()->second.m0 = 5;
  EXPECT_FALSE(check_quantized_model(d).empty());

  QuantizedModel e = good;
  e.act_qparams["stray"] = QuantParams{1.0, 0};
  EXPECT_FALSE(check_quantized_model(e).empty());
}

TEST(CheckQuantized, AccumulatorOverflowIsCaught) {
  // fan-in 70000 * 255 * 127 exceeds int32
  ModelGraph g = ChainBuilder("big", {70000}).dense(1).build();
  std::fill(g.weights.at(g.nodes[0].weight()).begin(), g.weights.at(g.nodes[0].weight()).end(), 1.0f);
  CalibrationStats stats;
  stats[g.input_id] = {0.0, 1.0, 1};
  stats[g.output_id] = {0.0, 1.0, 1};
  const QuantizedModel qm = quantize_model(g, stats);
  EXPECT_GT(accumulator_bound(qm, qm.graph.nodes[0]), std::numeric_limits<std::int32_t>::max());
  EXPECT_FALSE(check_quantized_model(qm).empty());
}

}  // namespace
}  // namespace edgecrack
