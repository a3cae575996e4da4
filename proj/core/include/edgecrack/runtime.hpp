// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "edgecrack/graph.hpp"
#include "edgecrack/quantize.hpp"

namespace edgecrack {

/// NHWC float activations.
struct FloatTensor {
  Shape shape;
  std::vector<float> data;

  bool operator==(const FloatTensor&) const = default;
};

FloatTensor make_tensor(Shape shape, float fill = 0.0f);

struct Int8Tensor {
  Shape shape;
  std::vector<std::int8_t> data;
};

/// Int8 logits straight off the device, plus how to read them.
struct RawOutput {
  std::vector<std::int8_t> logits_q;
  QuantParams qparams;
};

/// Called after each node with the node and the tensor it produced.
using FloatObserver = std::function<void(const NodeSpec&, const FloatTensor&)>;

/// Float reference executor. Softmax, when present, subtracts the max first.
FloatTensor run_float(const ModelGraph& model, const FloatTensor& input,
                      const FloatObserver& observer = {});

/// Integer-only executor over a QuantizedModel. Single-threaded and
/// reentrant; the model is only read.
RawOutput run_quant(const QuantizedModel& qm, const FloatTensor& input);

/// Same as run_quant but starting from an already-quantized input, returning
/// every intermediate tensor keyed by tensor id (input included).
std::map<std::string, Int8Tensor> run_quant_trace(const QuantizedModel& qm,
                                                  const Int8Tensor& input);

Int8Tensor quantize_tensor(const FloatTensor& t, const QuantParams& p);
FloatTensor dequantize_tensor(const Int8Tensor& t, const QuantParams& p);

/// Throws NotDeployable if the graph uses ops outside the int8 kernel set.
void require_int8_kernels(const ModelGraph& graph);

}  // namespace edgecrack
