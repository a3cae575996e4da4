// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edgecrack/image.hpp"

namespace edgecrack {

struct IntRange {
  int min = 0;
  int max = 0;
};

/// Synthetic stand-in for a crack / no-crack photo dataset.
struct SynthConfig {
  int n_per_class = 100;
  int width = 227;
  int height = 227;
  std::uint64_t seed = 42;
  IntRange crack_width_px{1, 3};
  IntRange crack_count{1, 3};
  int noise_amplitude = 30;  // 0..255, peak deviation of the background texture
};

/// Throws InvalidArity on a nonsensical config.
void validate(const SynthConfig& cfg);

/// Deterministic in (cfg, label, index).
ImageBuffer synth_image(const SynthConfig& cfg, Label label, int index);

/// Draws one dark jagged polyline into `img`. Exposed for tests.
void draw_crack(ImageBuffer& img, double x0, double y0, double heading, double length,
                double width, double darkness, std::uint64_t seed);

/// All samples, negatives first, in index order.
std::vector<LabeledSample> synth_samples(const SynthConfig& cfg);

struct ManifestEntry {
  std::string path;  // relative to the dataset root
  Label label;
};

/// Writes root/positive/*.ppm, root/negative/*.ppm and root/manifest.txt.
std::vector<ManifestEntry> gen_synthetic_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace edgecrack
