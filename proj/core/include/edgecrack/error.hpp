// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgecrack {

enum class Errc {
  // graph
  ShapeMismatch,
  NonPositiveDim,
  InvalidArity,
  // model / image io
  ParseError,
  WeightLengthMismatch,
  UnknownOpKind,
  IoError,
  UnsupportedMaxval,
  MissingClassDir,
  // compat
  ShapesNotInferred,
  EmptyGraphAfterStrip,
  // optimize
  EmptyCalibrationSet,
  NonFiniteRange,
  MultiplierOutOfRange,
  MissingStats,
  InvalidSparsity,
  InvalidK,
  // enef
  InvariantViolation,
  BadMagic,
  UnsupportedVersion,
  ChecksumMismatch,
  TruncatedSection,
  MalformedTable,
  // runtime / harness
  WrongChannelCount,
  NotDeployable,
  EmptyBatch,
  EmptyDataset,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace edgecrack
