// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <thread>

#include <json.hpp>

#include "edgecrack/error.hpp"
#include "edgecrack/model_io.hpp"

namespace edgecrack {

using json = nlohmann::json;

void ConfusionMatrix::add(Label truth, Label predicted) {
  if (truth == Label::Positive) {
    (predicted == Label::Positive ? tp : fn) += 1;
  } else {
    (predicted == Label::Positive ? fp : tn) += 1;
  }
}

namespace {

using clock = std::chrono::steady_clock;

double ms(clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

}  // namespace

PredictFn make_quant_predictor(const QuantizedModel& qm) {
  return [&qm](const ImageBuffer& img) {
    TimedPrediction out;
    const auto t0 = clock::now();
    const FloatTensor input = preprocess(img);
    const auto t1 = clock::now();
    const RawOutput raw = run_quant(qm, input);
    const auto t2 = clock::now();
    out.prediction = postprocess(raw);
    const auto t3 = clock::now();
    out.times = StageTimes{ms(t1 - t0), ms(t2 - t1), ms(t3 - t2)};
    return out;
  };
}

PredictFn make_float_predictor(const ModelGraph& model) {
  const bool has_softmax = !model.nodes.empty() && std::holds_alternative<Softmax>(model.nodes.back().kind);
  return [&model, has_softmax](const ImageBuffer& img) {
    TimedPrediction out;
    const auto t0 = clock::now();
    const FloatTensor input = preprocess(img);
    const auto t1 = clock::now();
    const FloatTensor result = run_float(model, input);
    const auto t2 = clock::now();
    std::vector<double> scores(result.data.begin(), result.data.end());
    out.prediction.probs = has_softmax ? scores : softmax(scores);
    out.prediction.label = argmax_label(result.data);
    const auto t3 = clock::now();
    out.times = StageTimes{ms(t1 - t0), ms(t2 - t1), ms(t3 - t2)};
    return out;
  };
}

EvalReport evaluate(const PredictFn& predict, std::span<const LabeledSample> samples, const EvalOptions& options) {
  if (samples.empty()) throw Error(Errc::EmptyDataset, "no samples to evaluate");

  std::vector<TimedPrediction> results(samples.size());
  const unsigned threads = std::clamp<unsigned>(options.threads, 1, static_cast<unsigned>(samples.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) results[i] = predict(samples[i].image);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < samples.size(); i += threads) results[i] = predict(samples[i].image);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport report;
  report.model = options.model_name;
  report.dataset = options.dataset_name;
  report.timestamp = current_timestamp();
  std::vector<StageTimes> times;
  times.reserve(results.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    report.matrix.add(samples[i].label, results[i].prediction.label);
    times.push_back(results[i].times);
  }
  report.accuracy = report.matrix.accuracy();
  report.latency = summarize_latency(times);
  return report;
}

std::string current_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::string report_to_json(const EvalReport& r) {
  json doc{{"model", r.model},
           {"dataset", r.dataset},
           {"timestamp", r.timestamp},
           {"tp", r.matrix.tp},
           {"fp", r.matrix.fp},
           {"fn", r.matrix.fn},
           {"tn", r.matrix.tn},
           {"accuracy", r.accuracy},
           {"latency",
            {{"n", r.latency.n},
             {"mean_ms", r.latency.mean_ms},
             {"p50_ms", r.latency.p50_ms},
             {"p95_ms", r.latency.p95_ms},
             {"min_ms", r.latency.min_ms},
             {"max_ms", r.latency.max_ms},
             {"pre_ms", r.latency.pre_ms},
             {"infer_ms", r.latency.infer_ms},
             {"post_ms", r.latency.post_ms}}}};
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  EvalReport r;
  try {
    const json doc = json::parse(text.begin(), text.end());
    r.model = doc.at("model").get<std::string>();
    r.dataset = doc.at("dataset").get<std::string>();
    r.timestamp = doc.at("timestamp").get<std::string>();
    r.matrix.tp = doc.at("tp").get<std::int64_t>();
    r.matrix.fp = doc.at("fp").get<std::int64_t>();
    r.matrix.fn = doc.at("fn").get<std::int64_t>();
    r.matrix.tn = doc.at("tn").get<std::int64_t>();
    r.accuracy = doc.at("accuracy").get<double>();
    const json& lat = doc.at("latency");
    r.latency.n = lat.at("n").get<std::size_t>();
    r.latency.mean_ms = lat.at("mean_ms").get<double>();
    r.latency.p50_ms = lat.at("p50_ms").get<double>();
    r.latency.p95_ms = lat.at("p95_ms").get<double>();
    r.latency.min_ms = lat.at("min_ms").get<double>();
    r.latency.max_ms = lat.at("max_ms").get<double>();
    r.latency.pre_ms = lat.at("pre_ms").get<double>();
    r.latency.infer_ms = lat.at("infer_ms").get<double>();
    r.latency.post_ms = lat.at("post_ms").get<double>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("report: ") + e.what());
  }
  return r;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  write_text(path, report_to_json(report));
}

}  // namespace edgecrack
