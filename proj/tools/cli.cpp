// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgecrack/compat.hpp"
#include "edgecrack/enef.hpp"
#include "edgecrack/error.hpp"
#include "edgecrack/evaluate.hpp"
#include "edgecrack/host.hpp"
#include "edgecrack/model_io.hpp"
#include "edgecrack/passes.hpp"
#include "edgecrack/quantize.hpp"
#include "edgecrack/reference_model.hpp"
#include "edgecrack/runtime.hpp"
#include "edgecrack/synth.hpp"

namespace edgecrack::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Globals {
  std::string profile;
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string report;
};

struct ModelArgs {
  std::string graph;
  std::string weights;  // defaults to <graph stem>.bin
};

void add_model_args(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("model", m.graph, "Graph descriptor (.json)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--weights", m.weights, "Weights blob (default: descriptor path with .bin)");
}

fs::path weights_path(const ModelArgs& m) {
  if (!m.weights.empty()) return m.weights;
  return fs::path(m.graph).replace_extension(".bin");
}

ModelGraph load(const ModelArgs& m) { return load_model(m.graph, weights_path(m)); }

DeviceProfile profile_of(const Globals& g) {
  return g.profile.empty() ? default_kl520_profile() : load_profile(g.profile);
}

fs::path out_dir(const Globals& g) {
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + g.out + ": " + ec.message());
  return g.out;
}

// Descriptor path for a derived model: explicit --output wins, otherwise
// <out>/<input stem>.<suffix>.json.
fs::path derived_path(const Globals& g, const std::string& explicit_path, const std::string& input,
                      const std::string& suffix, const std::string& ext) {
  if (!explicit_path.empty()) return explicit_path;
  std::string stem = fs::path(input).stem().string();
  if (!suffix.empty()) stem += "." + suffix;
  return out_dir(g) / (stem + ext);
}

void save_derived(const ModelGraph& model, const fs::path& graph_path, std::ostream& out) {
  const fs::path weights = fs::path(graph_path).replace_extension(".bin");
  save_model(model, graph_path, weights);
  out << "wrote " << graph_path.string() << " + " << weights.string() << "\n";
}

json violations_json(const std::vector<Violation>& vs) {
  json arr = json::array();
  for (const auto& v : vs) {
    arr.push_back({{"node", v.node_id}, {"code", std::string(to_string(v.code))}, {"detail", v.detail}});
  }
  return arr;
}

void print_violations(const std::vector<Violation>& vs, std::ostream& out) {
  for (const auto& v : vs) out << v.node_id << ": " << to_string(v.code) << ": " << v.detail << "\n";
  out << vs.size() << (vs.size() == 1 ? " violation" : " violations") << "\n";
}

json latency_json(const LatencyStats& s) {
  return {{"n", s.n},           {"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms},
          {"p95_ms", s.p95_ms}, {"min_ms", s.min_ms},   {"max_ms", s.max_ms},
          {"pre_ms", s.pre_ms}, {"infer_ms", s.infer_ms}, {"post_ms", s.post_ms}};
}

std::vector<LabeledSample> load_samples(const fs::path& dir, std::ostream& err) {
  DatasetLoad load = load_dataset_dir(dir);
  if (load.skipped > 0) err << "warning: skipped " << load.skipped << " unreadable image(s) in " << dir.string() << "\n";
  return std::move(load.samples);
}

CalibrationStats calibrate(const ModelGraph& model, const fs::path& dir, std::size_t limit, std::ostream& err) {
  std::vector<LabeledSample> samples = load_samples(dir, err);
  if (limit > 0 && samples.size() > limit) {
    // keep both classes represented: take evenly spaced samples
    std::vector<LabeledSample> picked;
    for (std::size_t i = 0; i < limit; ++i) picked.push_back(std::move(samples[i * samples.size() / limit]));
    samples = std::move(picked);
  }
  std::vector<FloatTensor> inputs;
  inputs.reserve(samples.size());
  for (const auto& s : samples) inputs.push_back(preprocess(s.image));
  return collect_calibration_stats(model, inputs);
}

IntRange parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArity, "bad range '" + text + "' (expected N or MIN:MAX)");
  }
}

std::string model_name_from(const fs::path& path) {
  std::string stem = path.stem().string();
  for (const char* suffix : {".fixed", ".stripped"}) {
    const std::string s(suffix);
    if (stem.size() > s.size() && stem.ends_with(s)) stem.resize(stem.size() - s.size());
  }
  return stem;
}

void emit_report(const Globals& g, const std::string& text, std::ostream& out) {
  out << text;
  if (!g.report.empty()) write_text(g.report, text);
}

}  // namespace

int run_pipeline_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"edgecrack: compile, quantize, pack and evaluate crack-classification CNNs", "edgecrack"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--profile", g.profile, "Device profile file (default: built-in kneron-kl520)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for synthetic data")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--report", g.report, "Write the structured report here as well");

  std::function<int()> action;

  // synth
  SynthConfig synth_cfg;
  std::string crack_width = "1:3";
  std::string crack_count = "1:3";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic crack dataset under --out");
  synth->add_option("-n,--n-per-class", synth_cfg.n_per_class)->capture_default_str();
  synth->add_option("--width", synth_cfg.width)->capture_default_str();
  synth->add_option("--height", synth_cfg.height)->capture_default_str();
  synth->add_option("--noise", synth_cfg.noise_amplitude, "Texture amplitude 0..255")->capture_default_str();
  synth->add_option("--crack-width", crack_width, "Crack width range in px, MIN:MAX")->capture_default_str();
  synth->add_option("--crack-count", crack_count, "Cracks per positive image, MIN:MAX")->capture_default_str();
  synth->callback([&] {
    action = [&] {
      synth_cfg.seed = g.seed;
      synth_cfg.crack_width_px = parse_range(crack_width);
      synth_cfg.crack_count = parse_range(crack_count);
      const auto manifest = gen_synthetic_dataset(synth_cfg, out_dir(g));
      out << "wrote " << manifest.size() << " images to " << g.out << "\n";
      return kExitOk;
    };
  });

  // reference
  bool blank = false;
  std::vector<int> channels{8, 8, 16, 16, 32, 32};
  int hidden = 64;
  std::string reference_name = "crack_cnn";
  auto* reference = app.add_subcommand("reference", "Write the hand-crafted classifier (or a blank reference net)");
  reference->add_flag("--blank", blank, "Zero-weight reference topology instead of the hand-crafted model");
  reference->add_option("--channels", channels, "Six conv widths (with --blank)")->expected(6)->delimiter(',');
  reference->add_option("--hidden", hidden, "Hidden dense width (with --blank)")->capture_default_str();
  reference->add_option("--name", reference_name, "Output file stem")->capture_default_str();
  reference->callback([&] {
    action = [&] {
      ModelGraph model = blank ? build_reference_net(channels, hidden) : build_handcrafted_model();
      save_derived(model, out_dir(g) / (reference_name + ".json"), out);
      return kExitOk;
    };
  });

  // check
  ModelArgs check_model;
  auto* check = app.add_subcommand("check", "Report operators and resources the device profile cannot run");
  add_model_args(check, check_model);
  check->callback([&] {
    action = [&] {
      const DeviceProfile profile = profile_of(g);
      const ModelGraph model = load(check_model);
      const auto vs = check_compat(model, profile);
      print_violations(vs, out);
      if (!g.report.empty()) {
        json doc{{"model", model.name},
                 {"profile", profile.name},
                 {"memory_bytes", estimate_memory(model, true)},
                 {"violations", violations_json(vs)}};
        write_text(g.report, doc.dump(2) + "\n");
      }
      return vs.empty() ? kExitOk : kExitViolations;
    };
  });

  // strip
  ModelArgs strip_model;
  std::string strip_output;
  auto* strip = app.add_subcommand("strip", "Remove the trailing run of unsupported operators");
  add_model_args(strip, strip_model);
  strip->add_option("-o,--output", strip_output, "Output descriptor (default: <out>/<stem>.stripped.json)");
  strip->callback([&] {
    action = [&] {
      const StripResult r = strip_unsupported_head(load(strip_model), profile_of(g));
      for (const auto& n : r.removed) out << "removed " << n.id << " (" << op_name(n.kind) << ")\n";
      save_derived(r.graph, derived_path(g, strip_output, strip_model.graph, "stripped", ".json"), out);
      const auto remaining = check_compat(r.graph, profile_of(g));
      if (!remaining.empty()) {
        print_violations(remaining, out);
        return kExitViolations;
      }
      return kExitOk;
    };
  });

  // prune
  ModelArgs prune_model;
  double sparsity = 0.5;
  std::string prune_output;
  auto* prune = app.add_subcommand("prune", "Zero the smallest-magnitude weights of every tensor");
  add_model_args(prune, prune_model);
  prune->add_option("--sparsity", sparsity, "Fraction in [0, 1)")->required();
  prune->add_option("-o,--output", prune_output, "Output descriptor (default: <out>/<stem>.pruned.json)");
  prune->callback([&] {
    action = [&] {
      const ModelGraph pruned = prune_magnitude(load(prune_model), sparsity);
      save_derived(pruned, derived_path(g, prune_output, prune_model.graph, "pruned", ".json"), out);
      return kExitOk;
    };
  });

  // cluster
  ModelArgs cluster_model;
  int k = 16;
  int max_iters = 50;
  std::string cluster_output;
  auto* cluster = app.add_subcommand("cluster", "k-means cluster the values of every weight tensor");
  add_model_args(cluster, cluster_model);
  cluster->add_option("--k", k, "Clusters per tensor (>= 2)")->capture_default_str();
  cluster->add_option("--max-iters", max_iters, "Lloyd iteration cap")->capture_default_str();
  cluster->add_option("-o,--output", cluster_output, "Output descriptor (default: <out>/<stem>.clustered.json)");
  cluster->callback([&] {
    action = [&] {
      const ModelGraph clustered = cluster_weights(load(cluster_model), k, max_iters);
      save_derived(clustered, derived_path(g, cluster_output, cluster_model.graph, "clustered", ".json"), out);
      return kExitOk;
    };
  });

  // quantize
  ModelArgs quant_model;
  std::string calib_dir;
  std::size_t calib_limit = 0;
  std::string quant_output;
  auto* quantize = app.add_subcommand("quantize", "Calibrate and convert a stripped float model to int8 (fixed-point file)");
  add_model_args(quantize, quant_model);
  quantize->add_option("--calib-dir", calib_dir, "Dataset directory with positive/ and negative/")
      ->required()
      ->check(CLI::ExistingDirectory);
  quantize->add_option("--calib-limit", calib_limit, "Use at most N calibration images (0 = all)");
  quantize->add_option("-o,--output", quant_output, "Output file (default: <out>/<stem>.fixed.json)");
  quantize->callback([&] {
    action = [&] {
      const ModelGraph model = load(quant_model);
      require_int8_kernels(model);
      const QuantizedModel qm = quantize_model(model, calibrate(model, calib_dir, calib_limit, err));
      const fs::path path = derived_path(g, quant_output, quant_model.graph, "fixed", ".json");
      save_quantized(qm, path);
      out << "wrote " << path.string() << "\n";
      return kExitOk;
    };
  });

  // pack
  std::string fixed_path;
  std::string pack_output;
  auto* pack = app.add_subcommand("pack", "Pack a fixed-point file into an .enef archive");
  pack->add_option("fixed", fixed_path, "Fixed-point file from `quantize`")->required()->check(CLI::ExistingFile);
  pack->add_option("-o,--output", pack_output, "Output archive (default: <out>/<name>.enef)");
  pack->callback([&] {
    action = [&] {
      const QuantizedModel qm = load_quantized(fixed_path);
      const fs::path path =
          pack_output.empty() ? out_dir(g) / (model_name_from(fixed_path) + ".enef") : fs::path(pack_output);
      enef::write_archive(path, qm, {qm.graph.name, profile_of(g).name});
      out << "wrote " << path.string() << " (" << fs::file_size(path) << " bytes)\n";
      return kExitOk;
    };
  });

  // run
  std::string run_archive;
  std::string run_image;
  auto* run = app.add_subcommand("run", "Classify one image with a packed model");
  run->add_option("archive", run_archive, ".enef archive")->required()->check(CLI::ExistingFile);
  run->add_option("image", run_image, "PPM image")->required()->check(CLI::ExistingFile);
  run->callback([&] {
    action = [&] {
      const enef::Archive archive = enef::read_archive(run_archive);
      const Prediction p = postprocess(run_quant(archive.model, preprocess(read_image(run_image))));
      const double confidence = p.probs.at(static_cast<std::size_t>(p.label));
      out << "label: " << to_string(p.label) << "\n"
          << std::fixed << std::setprecision(6) << "probability: " << confidence << "\n"
          << "probs: [" << p.probs[0] << ", " << p.probs[1] << "]\n";
      return kExitOk;
    };
  });

  // eval
  std::string eval_archive;
  std::string eval_data;
  unsigned eval_threads = 1;
  auto* eval = app.add_subcommand("eval", "Accuracy, confusion matrix and latency over a labeled directory");
  eval->add_option("archive", eval_archive, ".enef archive")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "Dataset directory with positive/ and negative/")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--threads", eval_threads, "Worker threads (results are independent of it)")
      ->capture_default_str();
  eval->callback([&] {
    action = [&] {
      const enef::Archive archive = enef::read_archive(eval_archive);
      const auto samples = load_samples(eval_data, err);
      const EvalReport report = evaluate(make_quant_predictor(archive.model), samples,
                                         {archive.metadata.model_name, eval_data, eval_threads});
      emit_report(g, report_to_json(report), out);
      return kExitOk;
    };
  });

  // bench
  std::string bench_archive;
  std::string bench_data;
  int bench_n = 100;
  std::size_t bench_warmup = 5;
  auto* bench = app.add_subcommand("bench", "Single-threaded end-to-end latency per image");
  bench->add_option("archive", bench_archive, ".enef archive")->required()->check(CLI::ExistingFile);
  bench->add_option("--data", bench_data, "Image directory (default: synthetic images from --seed)")
      ->check(CLI::ExistingDirectory);
  bench->add_option("-n,--images", bench_n, "Measured images when generating synthetic input")->capture_default_str();
  bench->add_option("--warmup", bench_warmup, "Unmeasured leading runs")->capture_default_str();
  bench->callback([&] {
    action = [&] {
      const enef::Archive archive = enef::read_archive(bench_archive);
      std::vector<ImageBuffer> images;
      if (!bench_data.empty()) {
        for (auto& s : load_samples(bench_data, err)) images.push_back(std::move(s.image));
      } else {
        SynthConfig cfg;
        cfg.seed = g.seed;
        const int total = bench_n + static_cast<int>(bench_warmup);
        cfg.n_per_class = (total + 1) / 2;
        for (auto& s : synth_samples(cfg)) images.push_back(std::move(s.image));
        images.resize(static_cast<std::size_t>(total));
      }
      const LatencyStats stats = time_pipeline(archive.model, images, bench_warmup);
      json doc{{"model", archive.metadata.model_name},
               {"dataset", bench_data.empty() ? "synthetic" : bench_data},
               {"timestamp", current_timestamp()},
               {"warmup", bench_warmup},
               {"latency", latency_json(stats)}};
      emit_report(g, doc.dump(2) + "\n", out);
      return kExitOk;
    };
  });

  // pipeline
  ModelArgs pipe_model;
  std::string pipe_data;
  std::string pipe_calib;
  std::size_t pipe_calib_limit = 200;
  int pipe_n = 100;
  int pipe_noise = 30;
  unsigned pipe_threads = 1;
  auto* pipeline = app.add_subcommand(
      "pipeline", "check -> strip -> check -> quantize -> pack -> eval; writes <out>/<name>.enef and a report");
  pipeline->add_option("model", pipe_model.graph, "Graph descriptor (default: hand-crafted classifier)")
      ->check(CLI::ExistingFile);
  pipeline->add_option("--weights", pipe_model.weights, "Weights blob (default: descriptor path with .bin)");
  pipeline->add_option("--data", pipe_data, "Evaluation directory (default: synthesize <out>/data from --seed)")
      ->check(CLI::ExistingDirectory);
  pipeline->add_option("--calib-dir", pipe_calib, "Calibration directory (default: synthesize <out>/calib)")
      ->check(CLI::ExistingDirectory);
  pipeline->add_option("--calib-limit", pipe_calib_limit, "Use at most N calibration images (0 = all)")
      ->capture_default_str();
  pipeline->add_option("-n,--n-per-class", pipe_n, "Images per class when synthesizing")->capture_default_str();
  pipeline->add_option("--noise", pipe_noise, "Texture amplitude when synthesizing")->capture_default_str();
  pipeline->add_option("--threads", pipe_threads, "Evaluation worker threads")->capture_default_str();
  pipeline->callback([&] {
    action = [&] {
      const DeviceProfile profile = profile_of(g);
      const fs::path dir = out_dir(g);
      const ModelGraph model = pipe_model.graph.empty() ? build_handcrafted_model() : load(pipe_model);

      const auto before = check_compat(model, profile);
      out << "[check] " << model.name << " vs " << profile.name << "\n";
      print_violations(before, out);

      const StripResult stripped = strip_unsupported_head(model, profile);
      for (const auto& n : stripped.removed) out << "[strip] removed " << n.id << " (" << op_name(n.kind) << ")\n";
      const auto after = check_compat(stripped.graph, profile);
      out << "[check] after strip\n";
      print_violations(after, out);
      if (!after.empty()) return kExitViolations;

      auto synthesize = [&](const fs::path& where, std::uint64_t seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.n_per_class = pipe_n;
        cfg.noise_amplitude = pipe_noise;
        gen_synthetic_dataset(cfg, where);
        out << "[synth] " << 2 * pipe_n << " images -> " << where.string() << "\n";
        return where;
      };
      const fs::path data = pipe_data.empty() ? synthesize(dir / "data", g.seed) : fs::path(pipe_data);
      const fs::path calib = !pipe_calib.empty() ? fs::path(pipe_calib)
                             : pipe_data.empty()  ? synthesize(dir / "calib", g.seed + 1)
                                                  : data;

      const QuantizedModel qm = quantize_model(stripped.graph, calibrate(stripped.graph, calib, pipe_calib_limit, err));
      const fs::path fixed = dir / (model.name + ".fixed.json");
      save_quantized(qm, fixed);
      out << "[quantize] " << fixed.string() << "\n";

      const fs::path archive_path = dir / (model.name + ".enef");
      enef::write_archive(archive_path, qm, {model.name, profile.name});
      out << "[pack] " << archive_path.string() << " (" << fs::file_size(archive_path) << " bytes)\n";

      const enef::Archive archive = enef::read_archive(archive_path);
      const auto samples = load_samples(data, err);
      const EvalReport report = evaluate(make_quant_predictor(archive.model), samples,
                                         {archive.metadata.model_name, data.string(), pipe_threads});
      const fs::path report_path = g.report.empty() ? dir / "report.json" : fs::path(g.report);
      write_report(report, report_path);
      out << "[eval] accuracy " << std::fixed << std::setprecision(4) << report.accuracy << " (tp " << report.matrix.tp
          << ", fp " << report.matrix.fp << ", fn " << report.matrix.fn << ", tn " << report.matrix.tn << "), mean "
          << std::setprecision(2) << report.latency.mean_ms << " ms -> " << report_path.string() << "\n";
      return kExitOk;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    return action();
  } catch (const Error& e) {
    err << "edgecrack: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "edgecrack: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace edgecrack::cli
