// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/host.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "edgecrack/error.hpp"

namespace edgecrack {

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> out(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    const double s = std::clamp((d + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    out[d] = Tap{lo, std::min(lo + 1, src - 1), s - lo};
  }
  return out;
}

}  // namespace

FloatTensor resize_bilinear(const ImageBuffer& img, int width, int height) {
  FloatTensor out = make_tensor({1, height, width, img.channels});
  const auto xs = taps(img.width, width);
  const auto ys = taps(img.height, height);
  const int c_n = img.channels;
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[x];
      for (int c = 0; c < c_n; ++c) {
        const double top = img.at(tx.lo, ty.lo, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.lo, c) * tx.frac;
        const double bottom = img.at(tx.lo, ty.hi, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.hi, c) * tx.frac;
        out.data[(static_cast<std::size_t>(y) * width + x) * c_n + c] =
            static_cast<float>(top * (1.0 - ty.frac) + bottom * ty.frac);
      }
    }
  }
  return out;
}

FloatTensor preprocess(const ImageBuffer& img) {
  if (img.channels != 3) {
    throw Error(Errc::WrongChannelCount, "expected 3 channels, got " + std::to_string(img.channels));
  }
  if (img.width < 1 || img.height < 1 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
    throw Error(Errc::ShapeMismatch, "pixel buffer does not match its dimensions");
  }
  FloatTensor t = resize_bilinear(img, kModelInputSize, kModelInputSize);
  for (auto& v : t.data) v = static_cast<float>(v / 255.0);
  return t;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double peak = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

namespace {

template <typename T>
Label argmax_of(std::span<const T> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best >= 1 ? Label::Positive : Label::Negative;
}

}  // namespace

Prediction postprocess(const RawOutput& raw) {
  std::vector<double> logits(raw.logits_q.size());
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = dequantize_value(raw.logits_q[i], raw.qparams);
  Prediction p;
  p.probs = softmax(logits);
  p.label = argmax_of<double>(p.probs);
  return p;
}

Label argmax_label(std::span<const float> scores) { return argmax_of<float>(scores); }

LatencyStats summarize_latency(std::span<const StageTimes> samples) {
  if (samples.empty()) throw Error(Errc::EmptyBatch, "no timed samples");
  LatencyStats s;
  s.n = samples.size();
  std::vector<double> totals;
  totals.reserve(samples.size());
  for (const auto& t : samples) {
    totals.push_back(t.total());
    s.pre_ms += t.pre_ms;
    s.infer_ms += t.infer_ms;
    s.post_ms += t.post_ms;
  }
  const auto n = static_cast<double>(s.n);
  s.pre_ms /= n;
  s.infer_ms /= n;
  s.post_ms /= n;
  std::sort(totals.begin(), totals.end());
  double sum = 0.0;
  for (double t : totals) sum += t;
  s.mean_ms = sum / n;
  auto rank = [&](std::size_t percent) {
    const std::size_t idx = (percent * totals.size() + 99) / 100;
    return totals[std::clamp<std::size_t>(idx, 1, totals.size()) - 1];
  };
  s.p50_ms = rank(50);
  s.p95_ms = rank(95);
  s.min_ms = totals.front();
  s.max_ms = totals.back();
  return s;
}

LatencyStats time_pipeline(const QuantizedModel& qm, std::span<const ImageBuffer> images, std::size_t warmup) {
  if (images.size() <= warmup) {
    throw Error(Errc::EmptyBatch, "no images left after " + std::to_string(warmup) + " warmup runs");
  }
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

  std::vector<StageTimes> times;
  times.reserve(images.size() - warmup);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto t0 = clock::now();
    const FloatTensor input = preprocess(images[i]);
    const auto t1 = clock::now();
    const RawOutput raw = run_quant(qm, input);
    const auto t2 = clock::now();
    const Prediction pred = postprocess(raw);
    const auto t3 = clock::now();
    (void)pred;
    if (i >= warmup) times.push_back(StageTimes{ms(t1 - t0), ms(t2 - t1), ms(t3 - t2)});
  }
  return summarize_latency(times);
}

}  // namespace edgecrack
