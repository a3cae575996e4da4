// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "edgecrack/compat.hpp"
#include "edgecrack/host.hpp"
#include "errc.hpp"
#include "test_support.hpp"

namespace edgecrack {
namespace {

using testing::code_of;

TEST(Preprocess, ConstantImage) {
  const FloatTensor t = preprocess(make_image(227, 227, 3, 128));
  EXPECT_EQ(t.shape, (Shape{1, 224, 224, 3}));
  for (float v : t.data) ASSERT_FLOAT_EQ(v, 128.0f / 255.0f);
}

TEST(Preprocess, RangeAndShapeForAnySize) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    ImageBuffer img = make_image(1 + static_cast<int>(rng() % 400), 1 + static_cast<int>(rng() % 400), 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
    const FloatTensor t = preprocess(img);
    EXPECT_EQ(t.shape, (Shape{1, kModelInputSize, kModelInputSize, 3}));
    for (float v : t.data) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Preprocess, WrongChannelCount) {
  EXPECT_EQ(code_of([] { preprocess(make_image(4, 4, 1)); }), Errc::WrongChannelCount);
}

TEST(Resize, CheckerboardUpsample) {
  ImageBuffer img = make_image(2, 2, 3);
  const std::uint8_t board[4] = {0, 255, 255, 0};
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) img.pixels[static_cast<std::size_t>(i * 3 + c)] = board[i];
  }
  const FloatTensor t = resize_bilinear(img, 4, 4);
  ASSERT_EQ(t.shape, (Shape{1, 4, 4, 3}));
  auto at = [&](int y, int x) { return t.data[static_cast<std::size_t>((y * 4 + x) * 3)]; };
  EXPECT_FLOAT_EQ(at(0, 0), 0.0f);
  EXPECT_FLOAT_EQ(at(3, 3), 0.0f);
  EXPECT_FLOAT_EQ(at(0, 3), 255.0f);
  EXPECT_FLOAT_EQ(at(3, 0), 255.0f);
  // sample point (0.25, 0.25): 255 * (0.75*0.25 + 0.25*0.75)
  EXPECT_FLOAT_EQ(at(1, 1), 95.625f);
  EXPECT_FLOAT_EQ(at(1, 2), 255.0f - 95.625f);
}

TEST(Resize, SameSizeIsIdentity) {
  std::mt19937_64 rng(2);
  ImageBuffer img = make_image(7, 5, 3);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
  const FloatTensor t = resize_bilinear(img, 7, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) ASSERT_FLOAT_EQ(t.data[i], img.pixels[i]);
}

TEST(Softmax, SumsToOneAndStable) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> logits(1 + rng() % 5);
    for (auto& v : logits) v = n(rng) + (i % 2 ? 1e4 : 0.0);
    const auto p = softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      ASSERT_TRUE(std::isfinite(v));
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  const std::vector<double> two{0.0, std::log(3.0)};
  const auto p = softmax(two);
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
}

TEST(Postprocess, DequantizesAndPicksArgmax) {
  const Prediction pred = postprocess(RawOutput{{10, 20}, {0.1, 0}});
  ASSERT_EQ(pred.probs.size(), 2u);
  EXPECT_NEAR(pred.probs[1], std::exp(1.0) / (1.0 + std::exp(1.0)), 1e-12);
  EXPECT_EQ(pred.label, Label::Positive);
  EXPECT_EQ(postprocess(RawOutput{{20, 10}, {0.1, 0}}).label, Label::Negative);
}

TEST(Postprocess, TiesGoToNegative) {
  const Prediction pred = postprocess(RawOutput{{-5, -5}, {0.3, 7}});
  EXPECT_EQ(pred.label, Label::Negative);
  EXPECT_DOUBLE_EQ(pred.probs[0], 0.5);
  const std::vector<float> tie{1.0f, 1.0f};
  EXPECT_EQ(argmax_label(tie), Label::Negative);
}

TEST(Latency, NearestRankPercentiles) {
  std::vector<StageTimes> s;
  for (int i = 100; i >= 1; --i) s.push_back(StageTimes{0.5, i - 1.0, 0.5});  // totals 1..100, shuffled order
  const LatencyStats st = summarize_latency(s);
  EXPECT_EQ(st.n, 100u);
  EXPECT_DOUBLE_EQ(st.mean_ms, 50.5);
  EXPECT_DOUBLE_EQ(st.p50_ms, 50.0);
  EXPECT_DOUBLE_EQ(st.p95_ms, 95.0);
  EXPECT_DOUBLE_EQ(st.min_ms, 1.0);
  EXPECT_DOUBLE_EQ(st.max_ms, 100.0);
  EXPECT_DOUBLE_EQ(st.pre_ms, 0.5);
  EXPECT_DOUBLE_EQ(st.infer_ms, 49.5);
  EXPECT_DOUBLE_EQ(st.post_ms, 0.5);
}

TEST(Latency, SmallBatches) {
  const std::vector<StageTimes> one{{1.0, 2.0, 3.0}};
  const LatencyStats st = summarize_latency(one);
  EXPECT_DOUBLE_EQ(st.p50_ms, 6.0);
  EXPECT_DOUBLE_EQ(st.p95_ms, 6.0);
  // n = 3: rank ceil(0.5*3) = 2, ceil(0.95*3) = 3
  const std::vector<StageTimes> three{{3, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_DOUBLE_EQ(summarize_latency(three).p50_ms, 2.0);
  EXPECT_DOUBLE_EQ(summarize_latency(three).p95_ms, 3.0);
  EXPECT_EQ(code_of([] { summarize_latency({}); }), Errc::EmptyBatch);
}

TEST(Latency, TimePipelineCountsMeasuredRuns) {
  std::mt19937_64 rng(4);
  const std::vector<int> ch{1, 1, 1, 1, 1, 1};
  const ModelGraph g = strip_unsupported_head(build_reference_net(ch, 1), default_kl520_profile()).graph;
  const QuantizedModel rq = testing::quantize_random(rng, g, 1);
  const std::vector<ImageBuffer> images(7, make_image(32, 32, 3, 90));
  const LatencyStats st = time_pipeline(rq, images, 2);
  EXPECT_EQ(st.n, 5u);
  EXPECT_LE(st.min_ms, st.p50_ms);
  EXPECT_LE(st.p50_ms, st.p95_ms);
  EXPECT_LE(st.p95_ms, st.max_ms);
  EXPECT_NEAR(st.pre_ms + st.infer_ms + st.post_ms, st.mean_ms, 1e-9);
  EXPECT_EQ(code_of([&] { time_pipeline(rq, images, 7); }), Errc::EmptyBatch);
}

}  // namespace
}  // namespace edgecrack
