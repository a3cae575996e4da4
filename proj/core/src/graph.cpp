// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/graph.hpp"

#include <set>
#include <sstream>

#include "edgecrack/error.hpp"

namespace edgecrack {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonPositiveDim: return "NonPositiveDim";
    case Errc::InvalidArity: return "InvalidArity";
    case Errc::ParseError: return "ParseError";
    case Errc::WeightLengthMismatch: return "WeightLengthMismatch";
    case Errc::UnknownOpKind: return "UnknownOpKind";
    case Errc::IoError: return "IoError";
    case Errc::UnsupportedMaxval: return "UnsupportedMaxval";
    case Errc::MissingClassDir: return "MissingClassDir";
    case Errc::ShapesNotInferred: return "ShapesNotInferred";
    case Errc::EmptyGraphAfterStrip: return "EmptyGraphAfterStrip";
    case Errc::EmptyCalibrationSet: return "EmptyCalibrationSet";
    case Errc::NonFiniteRange: return "NonFiniteRange";
    case Errc::MultiplierOutOfRange: return "MultiplierOutOfRange";
    case Errc::MissingStats: return "MissingStats";
    case Errc::InvalidSparsity: return "InvalidSparsity";
    case Errc::InvalidK: return "InvalidK";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::TruncatedSection: return "TruncatedSection";
    case Errc::MalformedTable: return "MalformedTable";
    case Errc::WrongChannelCount: return "WrongChannelCount";
    case Errc::NotDeployable: return "NotDeployable";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::EmptyDataset: return "EmptyDataset";
  }
  return "Unknown";
}

std::string_view to_string(DataType dtype) noexcept {
  switch (dtype) {
    case DataType::F32: return "F32";
    case DataType::I8: return "I8";
    case DataType::I32: return "I32";
  }
  return "?";
}

std::string_view to_string(ViolationCode code) noexcept {
  switch (code) {
    case ViolationCode::UnsupportedOp: return "UnsupportedOp";
    case ViolationCode::MemoryExceeded: return "MemoryExceeded";
    case ViolationCode::DimExceeded: return "DimExceeded";
    case ViolationCode::MissingTensor: return "MissingTensor";
    case ViolationCode::DuplicateId: return "DuplicateId";
    case ViolationCode::ShapeMismatch: return "ShapeMismatch";
  }
  return "?";
}

std::int64_t element_count(const Shape& shape) noexcept {
  if (shape.empty()) return 0;
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string_view op_name(const OpKind& kind) noexcept {
  struct Visitor {
    std::string_view operator()(const Conv2D&) const { return "Conv2D"; }
    std::string_view operator()(const MaxPool2D&) const { return "MaxPool2D"; }
    std::string_view operator()(const Relu&) const { return "Relu"; }
    std::string_view operator()(const Flatten&) const { return "Flatten"; }
    std::string_view operator()(const Dense&) const { return "Dense"; }
    std::string_view operator()(const Softmax&) const { return "Softmax"; }
  };
  return std::visit(Visitor{}, kind);
}

bool has_parameters(const OpKind& kind) noexcept {
  return std::holds_alternative<Conv2D>(kind) || std::holds_alternative<Dense>(kind);
}

namespace {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

[[noreturn]] void mismatch(const NodeSpec& node, const std::string& what) {
  throw Error(Errc::ShapeMismatch, "node '" + node.id + "': " + what);
}

const Shape& shape_of(const ModelGraph& g, const NodeSpec& node, const std::string& id) {
  auto it = g.tensors.find(id);
  if (it == g.tensors.end()) mismatch(node, "unknown tensor '" + id + "'");
  if (it->second.shape.empty()) mismatch(node, "tensor '" + id + "' has no shape");
  return it->second.shape;
}

void check_positive(const std::string& where, const Shape& s) {
  for (auto d : s) {
    if (d < 1) throw Error(Errc::NonPositiveDim, where + " has shape " + shape_str(s));
  }
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

Shape infer_node(const ModelGraph& g, const NodeSpec& node) {
  if (node.inputs.size() != (has_parameters(node.kind) ? 3u : 1u)) {
    mismatch(node, "wrong number of inputs");
  }
  const Shape& in = shape_of(g, node, node.activation());

  if (const auto* conv = std::get_if<Conv2D>(&node.kind)) {
    const Shape& w = shape_of(g, node, node.weight());
    const Shape& b = shape_of(g, node, node.bias());
    if (in.size() != 4) mismatch(node, "Conv2D expects rank-4 input, got " + shape_str(in));
    if (w.size() != 4) mismatch(node, "Conv2D weight must be [outC,kH,kW,inC]");
    if (w[3] != in[3]) {
      mismatch(node, "weight inC " + std::to_string(w[3]) + " != activation C " +
                         std::to_string(in[3]));
    }
    if (b.size() != 1 || b[0] != w[0]) mismatch(node, "bias must be [outC]");
    if (conv->stride < 1) throw Error(Errc::NonPositiveDim, node.id + ": stride < 1");
    check_positive(node.id + " weight", w);
    std::int64_t oh = 0;
    std::int64_t ow = 0;
    if (conv->padding == Padding::Same) {
      oh = ceil_div(in[1], conv->stride);
      ow = ceil_div(in[2], conv->stride);
    } else {
      oh = (in[1] - w[1]) / conv->stride + 1;
      ow = (in[2] - w[2]) / conv->stride + 1;
      if (in[1] < w[1] || in[2] < w[2]) oh = ow = 0;
    }
    Shape out{1, oh, ow, w[0]};
    check_positive(node.id + " output", out);
    return out;
  }
  if (const auto* pool = std::get_if<MaxPool2D>(&node.kind)) {
    if (in.size() != 4) mismatch(node, "MaxPool2D expects rank-4 input");
    if (pool->window < 1 || pool->stride < 1) {
      throw Error(Errc::NonPositiveDim, node.id + ": window/stride < 1");
    }
    std::int64_t oh = in[1] < pool->window ? 0 : (in[1] - pool->window) / pool->stride + 1;
    std::int64_t ow = in[2] < pool->window ? 0 : (in[2] - pool->window) / pool->stride + 1;
    Shape out{1, oh, ow, in[3]};
    check_positive(node.id + " output", out);
    return out;
  }
  if (std::holds_alternative<Relu>(node.kind) || std::holds_alternative<Softmax>(node.kind)) {
    return in;
  }
  if (std::holds_alternative<Flatten>(node.kind)) {
    std::int64_t n = 1;
    for (std::size_t i = in.size() > 1 ? 1 : 0; i < in.size(); ++i) n *= in[i];
    return Shape{n};
  }
  // Dense
  const Shape& w = shape_of(g, node, node.weight());
  const Shape& b = shape_of(g, node, node.bias());
  std::int64_t len = 0;
  if (in.size() == 1) {
    len = in[0];
  } else if (in.size() == 2 && in[0] == 1) {
    len = in[1];
  } else {
    mismatch(node, "Dense expects a flat input, got " + shape_str(in));
  }
  if (w.size() != 2) mismatch(node, "Dense weight must be [out,in]");
  if (w[1] != len) {
    mismatch(node, "Dense input length " + std::to_string(len) + " != weight inC " +
                       std::to_string(w[1]));
  }
  if (b.size() != 1 || b[0] != w[0]) mismatch(node, "bias must be [out]");
  check_positive(node.id + " weight", w);
  return Shape{w[0]};
}

}  // namespace

ModelGraph infer_shapes(ModelGraph graph) {
  auto in_it = graph.tensors.find(graph.input_id);
  if (in_it == graph.tensors.end()) {
    throw Error(Errc::ShapeMismatch, "graph input '" + graph.input_id + "' is not declared");
  }
  const Shape& in = in_it->second.shape;
  if (in.size() != 1 && in.size() != 2 && in.size() != 4) {
    throw Error(Errc::ShapeMismatch, "graph input rank must be 1, 2 or 4");
  }
  check_positive("graph input", in);

  for (const auto& node : graph.nodes) {
    Shape out = infer_node(graph, node);
    auto it = graph.tensors.find(node.output);
    if (it == graph.tensors.end()) {
      graph.tensors.emplace(node.output, TensorSpec{node.output, out, DataType::F32});
    } else {
      it->second.shape = std::move(out);
    }
  }
  return graph;
}

std::vector<Violation> validate_graph(const ModelGraph& graph, bool require_weight_data) {
  std::vector<Violation> out;
  auto add = [&](const std::string& node, ViolationCode code, std::string detail) {
    out.push_back(Violation{node, code, std::move(detail)});
  };

  for (const auto& [key, spec] : graph.tensors) {
    if (key != spec.id) {
      add(kGraphScope, ViolationCode::DuplicateId,
          "tensor registered as '" + key + "' but named '" + spec.id + "'");
    }
  }
  if (!graph.tensors.contains(graph.input_id)) {
    add(kGraphScope, ViolationCode::MissingTensor, "graph input '" + graph.input_id + "'");
  }
  if (!graph.tensors.contains(graph.output_id)) {
    add(kGraphScope, ViolationCode::MissingTensor, "graph output '" + graph.output_id + "'");
  }
  const std::string& expected_out = graph.nodes.empty() ? graph.input_id : graph.nodes.back().output;
  if (graph.output_id != expected_out) {
    add(kGraphScope, ViolationCode::ShapeMismatch,
        "graph output '" + graph.output_id + "' is not the final tensor '" + expected_out + "'");
  }

  std::set<std::string> param_ids;
  for (const auto& node : graph.nodes) {
    for (std::size_t i = 1; i < node.inputs.size(); ++i) param_ids.insert(node.inputs[i]);
  }

  std::set<std::string> node_ids;
  std::set<std::string> produced{graph.input_id};
  std::string previous = graph.input_id;
  for (const auto& node : graph.nodes) {
    if (!node_ids.insert(node.id).second) {
      add(node.id, ViolationCode::DuplicateId, "node id '" + node.id + "' repeated");
    }
    const std::size_t arity = has_parameters(node.kind) ? 3 : 1;
    if (node.inputs.size() != arity) {
      add(node.id, ViolationCode::ShapeMismatch,
          std::string(op_name(node.kind)) + " expects " + std::to_string(arity) + " inputs");
    }
    if (!node.inputs.empty()) {
      const std::string& act = node.inputs[0];
      if (!graph.tensors.contains(act)) {
        add(node.id, ViolationCode::MissingTensor, "activation '" + act + "'");
      } else if (act != previous) {
        add(node.id, ViolationCode::MissingTensor,
            "activation '" + act + "' is not produced by the preceding node");
      }
    }
    for (std::size_t i = 1; i < node.inputs.size() && i < 3; ++i) {
      const std::string& id = node.inputs[i];
      auto spec = graph.tensors.find(id);
      if (spec == graph.tensors.end()) {
        add(node.id, ViolationCode::MissingTensor, "parameter tensor '" + id + "'");
        continue;
      }
      if (!require_weight_data) continue;
      auto data = graph.weights.find(id);
      if (data == graph.weights.end()) {
        add(node.id, ViolationCode::MissingTensor, "parameter tensor '" + id + "'");
        continue;
      }
      if (static_cast<std::int64_t>(data->second.size()) != element_count(spec->second.shape) ||
          spec->second.shape.empty()) {
        add(node.id, ViolationCode::ShapeMismatch,
            "parameter '" + id + "' holds " + std::to_string(data->second.size()) +
                " values for shape " + shape_str(spec->second.shape));
      }
    }
    if (!graph.tensors.contains(node.output)) {
      add(node.id, ViolationCode::MissingTensor, "output '" + node.output + "'");
    }
    if (!produced.insert(node.output).second || param_ids.contains(node.output) ||
        graph.weights.contains(node.output)) {
      add(node.id, ViolationCode::DuplicateId, "tensor '" + node.output + "' produced twice");
    }
    previous = node.output;
  }
  return out;
}

ModelGraph build_reference_net(std::span<const int> channels, int hidden) {
  if (channels.size() != 6) {
    throw Error(Errc::InvalidArity,
                "expected 6 conv widths, got " + std::to_string(channels.size()));
  }
  for (int c : channels) {
    if (c < 1) throw Error(Errc::InvalidArity, "conv width must be >= 1");
  }
  if (hidden < 1) throw Error(Errc::InvalidArity, "hidden width must be >= 1");

  ModelGraph g;
  g.name = "crack_cnn";
  g.input_id = "input";
  g.tensors["input"] = TensorSpec{"input", {1, 224, 224, 3}, DataType::F32};

  std::string prev = "input";
  auto add_node = [&](const std::string& id, OpKind kind, std::vector<std::string> params) {
    NodeSpec node{id, kind, {prev}, id + "_out"};
    for (auto& p : params) node.inputs.push_back(std::move(p));
    g.tensors[node.output] = TensorSpec{node.output, {}, DataType::F32};
    prev = node.output;
    g.nodes.push_back(std::move(node));
  };
  auto add_param = [&](const std::string& id, Shape shape) {
    g.weights[id].assign(static_cast<std::size_t>(element_count(shape)), 0.0f);
    g.tensors[id] = TensorSpec{id, std::move(shape), DataType::F32};
  };

  std::int64_t in_c = 3;
  for (int i = 0; i < 6; ++i) {
    const std::string n = std::to_string(i + 1);
    add_param("conv" + n + "_w", {channels[i], 3, 3, in_c});
    add_param("conv" + n + "_b", {channels[i]});
    add_node("conv" + n, Conv2D{1, Padding::Same}, {"conv" + n + "_w", "conv" + n + "_b"});
    add_node("relu" + n, Relu{}, {});
    add_node("pool" + n, MaxPool2D{2, 2}, {});
    in_c = channels[i];
  }
  add_node("flatten", Flatten{}, {});
  add_param("fc1_w", {hidden, 3 * 3 * in_c});
  add_param("fc1_b", {hidden});
  add_node("fc1", Dense{}, {"fc1_w", "fc1_b"});
  add_node("fc1_relu", Relu{}, {});
  add_param("fc2_w", {2, hidden});
  add_param("fc2_b", {2});
  add_node("fc2", Dense{}, {"fc2_w", "fc2_b"});
  add_node("softmax", Softmax{}, {});
  g.output_id = prev;
  return infer_shapes(std::move(g));
}

std::vector<std::int64_t> spatial_trace(const ModelGraph& graph) {
  std::vector<std::int64_t> trace;
  const Shape& in = graph.input().shape;
  if (in.size() == 4) trace.push_back(in[1]);
  for (const auto& node : graph.nodes) {
    if (!std::holds_alternative<MaxPool2D>(node.kind)) continue;
    const Shape& s = graph.tensor(node.output).shape;
    if (s.size() == 4) trace.push_back(s[1]);
  }
  return trace;
}

}  // namespace edgecrack
