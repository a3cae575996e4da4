// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgecrack/graph.hpp"
#include "edgecrack/quantize.hpp"

namespace edgecrack {

/// Float model exchange format: a JSON graph descriptor (docs/model-format.md)
/// plus a blob of little-endian float32 parameters in declaration order.
ModelGraph load_model(const std::filesystem::path& graph_path,
                      const std::filesystem::path& weights_path);
void save_model(const ModelGraph& graph, const std::filesystem::path& graph_path,
                const std::filesystem::path& weights_path);

/// In-memory forms of the two files, used by the loaders above.
ModelGraph parse_model(std::string_view descriptor, std::span<const std::uint8_t> weights_blob);
std::string serialize_descriptor(const ModelGraph& graph);
std::vector<std::uint8_t> serialize_weights(const ModelGraph& graph);

/// Fixed-point model file (JSON): topology, qparams, integer parameters and
/// requant multipliers. The intermediate between `quantize` and `pack`.
void save_quantized(const QuantizedModel& qm, const std::filesystem::path& path);
QuantizedModel load_quantized(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace edgecrack
