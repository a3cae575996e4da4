// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/compat.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "edgecrack/error.hpp"

namespace edgecrack {

namespace {
using json = nlohmann::json;

const std::set<std::string>& known_ops() {
  static const std::set<std::string> ops{"Conv2D", "MaxPool2D", "Relu", "Flatten", "Dense", "Softmax"};
  return ops;
}
}  // namespace

DeviceProfile default_kl520_profile() {
  DeviceProfile p;
  p.name = "kneron-kl520";
  p.supported_ops = {"Conv2D", "MaxPool2D", "Relu", "Flatten", "Dense"};
  p.max_activation_bytes = 8 * 1024 * 1024;
  p.memory_budget_bytes = 32 * 1024 * 1024;
  p.max_spatial_dim = 1024;
  return p;
}

DeviceProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open profile " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::ParseError, path.string() + ": expected an object");

  static const std::set<std::string> fields{"name", "supported_ops", "max_activation_bytes",
                                            "memory_budget_bytes", "max_spatial_dim"};
  for (const auto& [key, value] : doc.items()) {
    if (!fields.contains(key)) throw Error(Errc::ParseError, "unknown profile field '" + key + "'");
  }

  DeviceProfile p = default_kl520_profile();
  try {
    if (doc.contains("name")) p.name = doc.at("name").get<std::string>();
    if (doc.contains("supported_ops")) {
      p.supported_ops.clear();
      for (const auto& op : doc.at("supported_ops")) {
        auto name = op.get<std::string>();
        if (!known_ops().contains(name)) throw Error(Errc::UnknownOpKind, name);
        p.supported_ops.insert(std::move(name));
      }
    }
    if (doc.contains("max_activation_bytes")) {
      p.max_activation_bytes = doc.at("max_activation_bytes").get<std::int64_t>();
    }
    if (doc.contains("memory_budget_bytes")) {
      p.memory_budget_bytes = doc.at("memory_budget_bytes").get<std::int64_t>();
    }
    if (doc.contains("max_spatial_dim")) p.max_spatial_dim = doc.at("max_spatial_dim").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  if (p.memory_budget_bytes <= 0) throw Error(Errc::ParseError, "memory_budget_bytes must be > 0");
  if (p.supported_ops.empty()) throw Error(Errc::ParseError, "supported_ops must not be empty");
  return p;
}

void save_profile(const DeviceProfile& p, const std::filesystem::path& path) {
  json doc{{"name", p.name},
           {"supported_ops", p.supported_ops},
           {"max_activation_bytes", p.max_activation_bytes},
           {"memory_budget_bytes", p.memory_budget_bytes},
           {"max_spatial_dim", p.max_spatial_dim}};
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

namespace {

std::int64_t activation_bytes(const ModelGraph& graph, const NodeSpec& node, std::int64_t elem) {
  return (element_count(graph.tensor(node.activation()).shape) +
          element_count(graph.tensor(node.output).shape)) *
         elem;
}

}  // namespace

std::int64_t estimate_memory(const ModelGraph& graph, bool quantized) {
  for (const auto& [id, t] : graph.tensors) {
    if (t.shape.empty()) throw Error(Errc::ShapesNotInferred, "tensor '" + id + "'");
  }
  const std::int64_t elem = quantized ? 1 : 4;
  std::int64_t weight_bytes = 0;
  std::int64_t peak_activations = 0;
  for (const auto& node : graph.nodes) {
    for (std::size_t i = 1; i < node.inputs.size(); ++i) {
      weight_bytes += element_count(graph.tensor(node.inputs[i]).shape) * elem + (quantized ? 8 : 0);
    }
    peak_activations = std::max(peak_activations, activation_bytes(graph, node, elem));
  }
  return weight_bytes + peak_activations;
}

std::vector<Violation> check_compat(const ModelGraph& graph, const DeviceProfile& profile) {
  std::vector<Violation> out = validate_graph(graph, /*require_weight_data=*/false);
  if (!out.empty()) return out;

  ModelGraph shaped;
  try {
    shaped = infer_shapes(graph);
  } catch (const Error& e) {
    out.push_back(Violation{kGraphScope, ViolationCode::ShapeMismatch, e.what()});
    return out;
  }

  auto check_dims = [&](const std::string& scope, const std::string& tensor_id) {
    const Shape& s = shaped.tensor(tensor_id).shape;
    if (profile.max_spatial_dim <= 0 || s.size() != 4) return;
    if (s[1] > profile.max_spatial_dim || s[2] > profile.max_spatial_dim) {
      out.push_back(Violation{scope, ViolationCode::DimExceeded,
                              "tensor '" + tensor_id + "' is " + std::to_string(s[1]) + "x" +
                                  std::to_string(s[2]) + ", limit " +
                                  std::to_string(profile.max_spatial_dim)});
    }
  };

  check_dims(kGraphScope, shaped.input_id);
  for (const auto& node : shaped.nodes) {
    if (!profile.supports(node.kind)) {
      out.push_back(Violation{node.id, ViolationCode::UnsupportedOp,
                              std::string(op_name(node.kind)) + " is not supported by " + profile.name});
    }
    check_dims(node.id, node.output);
    if (profile.max_activation_bytes > 0) {
      const std::int64_t bytes = activation_bytes(shaped, node, 1);
      if (bytes > profile.max_activation_bytes) {
        out.push_back(Violation{node.id, ViolationCode::MemoryExceeded,
                                "activations need " + std::to_string(bytes) + " bytes, limit " +
                                    std::to_string(profile.max_activation_bytes)});
      }
    }
  }
  const std::int64_t total = estimate_memory(shaped, /*quantized=*/true);
  if (total > profile.memory_budget_bytes) {
    out.push_back(Violation{kGraphScope, ViolationCode::MemoryExceeded,
                            "model needs " + std::to_string(total) + " bytes, budget " +
                                std::to_string(profile.memory_budget_bytes)});
  }
  return out;
}

StripResult strip_unsupported_head(const ModelGraph& graph, const DeviceProfile& profile) {
  std::size_t keep = graph.nodes.size();
  while (keep > 0 && !profile.supports(graph.nodes[keep - 1].kind)) --keep;
  if (keep == 0 && !graph.nodes.empty()) {
    throw Error(Errc::EmptyGraphAfterStrip, "every node of '" + graph.name + "' is unsupported");
  }

  StripResult result{graph, {}};
  ModelGraph& g = result.graph;
  result.removed.assign(graph.nodes.begin() + static_cast<std::ptrdiff_t>(keep), graph.nodes.end());
  g.nodes.resize(keep);
  for (const auto& node : result.removed) {
    g.tensors.erase(node.output);
    for (std::size_t i = 1; i < node.inputs.size(); ++i) {
      g.tensors.erase(node.inputs[i]);
      g.weights.erase(node.inputs[i]);
    }
  }
  if (!result.removed.empty()) g.output_id = g.nodes.back().output;
  return result;
}

}  // namespace edgecrack
