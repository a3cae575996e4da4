// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "edgecrack/graph.hpp"

namespace edgecrack {

/// What an accelerator accepts: an operator whitelist and resource limits.
struct DeviceProfile {
  std::string name;
  std::set<std::string> supported_ops;
  std::int64_t max_activation_bytes = 0;
  std::int64_t memory_budget_bytes = 0;
  std::int64_t max_spatial_dim = 0;

  bool supports(const OpKind& kind) const { return supported_ops.contains(std::string(op_name(kind))); }

  bool operator==(const DeviceProfile&) const = default;
};

/// Kneron KL520 model: no Softmax on the NPU, 32 MiB SDRAM.
DeviceProfile default_kl520_profile();

/// JSON file with the DeviceProfile field names. Throws ParseError.
DeviceProfile load_profile(const std::filesystem::path& path);
void save_profile(const DeviceProfile& profile, const std::filesystem::path& path);

/// Weight bytes (4/elem float, 1/elem + 8/tensor quantized) plus the largest
/// single-node input+output activation footprint. Throws ShapesNotInferred.
std::int64_t estimate_memory(const ModelGraph& graph, bool quantized);

/// Empty result means the graph can be deployed on the profile.
std::vector<Violation> check_compat(const ModelGraph& graph, const DeviceProfile& profile);

struct StripResult {
  ModelGraph graph;
  std::vector<NodeSpec> removed;
};

/// Drops the trailing run of unsupported nodes (e.g. the output Softmax).
/// Unsupported nodes in the interior are left in place.
StripResult strip_unsupported_head(const ModelGraph& graph, const DeviceProfile& profile);

}  // namespace edgecrack
