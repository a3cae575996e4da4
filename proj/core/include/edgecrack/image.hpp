// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace edgecrack {

/// Row-major interleaved 8-bit pixels.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const ImageBuffer&) const = default;
};

ImageBuffer make_image(int width, int height, int channels, std::uint8_t fill = 0);

/// Class index 0 is Negative, 1 is Positive (crack).
enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

std::string_view to_string(Label label) noexcept;

struct LabeledSample {
  ImageBuffer image;
  Label label = Label::Negative;
  std::string source;
};

/// Binary PPM (P6) or PGM (P5) with maxval 255.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_image(const ImageBuffer& img);

ImageBuffer read_image(const std::filesystem::path& path);
void write_image(const ImageBuffer& img, const std::filesystem::path& path);

struct DatasetLoad {
  std::vector<LabeledSample> samples;
  std::size_t skipped = 0;  // files that failed to parse
};

/// Reads root/negative/* and root/positive/*, each in lexicographic order.
DatasetLoad load_dataset_dir(const std::filesystem::path& root);

}  // namespace edgecrack
