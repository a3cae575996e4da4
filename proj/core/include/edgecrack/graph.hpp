// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace edgecrack {

enum class DataType : std::uint8_t { F32 = 0, I8 = 1, I32 = 2 };

std::string_view to_string(DataType dtype) noexcept;

using Shape = std::vector<std::int64_t>;

std::int64_t element_count(const Shape& shape) noexcept;

/// A named tensor. Activations are NHWC with a batch of 1 ([1, H, W, C]) or
/// rank-1 after Flatten; conv weights are [outC, kH, kW, inC]; dense weights
/// [out, in]; biases [out]. An empty shape means "not inferred yet".
struct TensorSpec {
  std::string id;
  Shape shape;
  DataType dtype = DataType::F32;

  bool operator==(const TensorSpec&) const = default;
};

enum class Padding : std::uint8_t { Same = 0, Valid = 1 };

struct Conv2D {
  int stride = 1;
  Padding padding = Padding::Same;
  bool operator==(const Conv2D&) const = default;
};
struct MaxPool2D {
  int window = 2;
  int stride = 2;
  bool operator==(const MaxPool2D&) const = default;
};
struct Relu {
  bool operator==(const Relu&) const = default;
};
struct Flatten {
  bool operator==(const Flatten&) const = default;
};
struct Dense {
  bool operator==(const Dense&) const = default;
};
struct Softmax {
  bool operator==(const Softmax&) const = default;
};

using OpKind = std::variant<Conv2D, MaxPool2D, Relu, Flatten, Dense, Softmax>;

/// "Conv2D", "MaxPool2D", ... as used in device profiles and model files.
std::string_view op_name(const OpKind& kind) noexcept;

/// True for kinds that carry a weight and a bias tensor.
bool has_parameters(const OpKind& kind) noexcept;

/// inputs[0] is the activation; Conv2D and Dense also list weight then bias.
struct NodeSpec {
  std::string id;
  OpKind kind;
  std::vector<std::string> inputs;
  std::string output;

  const std::string& activation() const { return inputs.at(0); }
  const std::string& weight() const { return inputs.at(1); }
  const std::string& bias() const { return inputs.at(2); }

  bool operator==(const NodeSpec&) const = default;
};

/// Single-input single-output chain of operations with float weights.
struct ModelGraph {
  std::string name;
  std::string input_id;
  std::string output_id;
  std::map<std::string, TensorSpec> tensors;
  std::vector<NodeSpec> nodes;
  std::map<std::string, std::vector<float>> weights;

  const TensorSpec& input() const { return tensors.at(input_id); }
  const TensorSpec& output() const { return tensors.at(output_id); }
  const TensorSpec& tensor(const std::string& id) const { return tensors.at(id); }

  bool operator==(const ModelGraph&) const = default;
};

enum class ViolationCode : std::uint8_t {
  UnsupportedOp,
  MemoryExceeded,
  DimExceeded,
  MissingTensor,
  DuplicateId,
  ShapeMismatch,
};

std::string_view to_string(ViolationCode code) noexcept;

inline constexpr const char* kGraphScope = "<graph>";

struct Violation {
  std::string node_id;  // or kGraphScope
  ViolationCode code;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// Fills in every activation shape. Throws ShapeMismatch / NonPositiveDim.
ModelGraph infer_shapes(ModelGraph graph);

/// Structural checks only; never throws. With require_weight_data=false the
/// float weight map is not consulted (quantized graphs keep parameters
/// elsewhere).
std::vector<Violation> validate_graph(const ModelGraph& graph, bool require_weight_data = true);

/// input [1,224,224,3] -> 6 x (Conv2D 3x3 Same, Relu, MaxPool 2/2) -> Flatten
/// -> Dense(hidden), Relu -> Dense(2) -> Softmax. Weights are zero.
ModelGraph build_reference_net(std::span<const int> channels, int hidden);

/// Spatial sizes [input H, after pool1, ..., after pool6] of a chain graph.
std::vector<std::int64_t> spatial_trace(const ModelGraph& graph);

}  // namespace edgecrack
