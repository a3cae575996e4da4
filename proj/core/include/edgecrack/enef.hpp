// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgecrack/quantize.hpp"

/// ENEF: the single-file deployable form of a QuantizedModel. Byte layout is
/// documented in docs/enef-format.md.
namespace edgecrack::enef {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::size_t kDirectoryEntrySize = 16;
inline constexpr std::size_t kSectionCount = 6;
inline constexpr std::size_t kAlignment = 8;

struct Metadata {
  std::string model_name;
  std::string profile_name;

  bool operator==(const Metadata&) const = default;
};

struct Archive {
  QuantizedModel model;
  Metadata metadata;

  bool operator==(const Archive&) const = default;
};

/// CRC-32 (IEEE 802.3 polynomial, reflected, init/xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

/// Deterministic; throws InvariantViolation if the model is not packable.
std::vector<std::uint8_t> pack(const QuantizedModel& qm, const Metadata& metadata);

/// Total over arbitrary input: returns an Archive or throws edgecrack::Error
/// with BadMagic, UnsupportedVersion, ChecksumMismatch, TruncatedSection or
/// MalformedTable.
Archive unpack(std::span<const std::uint8_t> bytes);

void write_archive(const std::filesystem::path& path, const QuantizedModel& qm, const Metadata& metadata);
Archive read_archive(const std::filesystem::path& path);

}  // namespace edgecrack::enef
