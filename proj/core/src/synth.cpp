// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "edgecrack/error.hpp"

namespace edgecrack {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so the mapping to ranges is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// One octave of lattice value noise in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(int width, int height, int cell, Rng& rng)
      : cell_(cell), cols_(width / cell + 2), rows_(height / cell + 2) {
    lattice_.resize(static_cast<std::size_t>(cols_) * rows_);
    for (auto& v : lattice_) v = rng.uniform(-1.0, 1.0);
  }

  double at(int x, int y) const {
    const double fx = static_cast<double>(x) / cell_;
    const double fy = static_cast<double>(y) / cell_;
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    const double tx = smoothstep(fx - ix);
    const double ty = smoothstep(fy - iy);
    auto v = [&](int cx, int cy) { return lattice_[static_cast<std::size_t>(cy) * cols_ + cx]; };
    const double top = v(ix, iy) + (v(ix + 1, iy) - v(ix, iy)) * tx;
    const double bottom = v(ix, iy + 1) + (v(ix + 1, iy + 1) - v(ix, iy + 1)) * tx;
    return top + (bottom - top) * ty;
  }

 private:
  int cell_;
  int cols_;
  int rows_;
  std::vector<double> lattice_;
};

struct Octave {
  int cell;
  double weight;
};

constexpr Octave kOctaves[] = {{48, 0.40}, {24, 0.25}, {12, 0.15}, {6, 0.12}, {3, 0.08}};

ImageBuffer background(const SynthConfig& cfg, Rng& rng) {
  ImageBuffer img = make_image(cfg.width, cfg.height, 3);
  const double base = rng.uniform(115.0, 185.0);
  double tint[3];
  for (double& t : tint) t = rng.uniform(-8.0, 8.0);

  std::vector<ValueNoise> octaves;
  for (const auto& o : kOctaves) octaves.emplace_back(cfg.width, cfg.height, o.cell, rng);

  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      double n = 0.0;
      for (std::size_t k = 0; k < octaves.size(); ++k) n += kOctaves[k].weight * octaves[k].at(x, y);
      const double level = base + cfg.noise_amplitude * n;
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(level + tint[c]), 0L, 255L));
      }
    }
  }
  return img;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = ax + t * dx - px;
  const double ey = ay + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

void validate(const SynthConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidArity, "synth config: " + what); };
  if (cfg.n_per_class < 0) bad("n_per_class < 0");
  if (cfg.width < 8 || cfg.height < 8 || cfg.width > 4096 || cfg.height > 4096) bad("image size out of range");
  if (cfg.crack_width_px.min < 1 || cfg.crack_width_px.max < cfg.crack_width_px.min) bad("crack width range");
  if (cfg.crack_count.min < 1 || cfg.crack_count.max < cfg.crack_count.min) bad("crack count range");
  if (cfg.noise_amplitude < 0 || cfg.noise_amplitude > 255) bad("noise amplitude must be in [0, 255]");
}

void draw_crack(ImageBuffer& img, double x0, double y0, double heading, double length, double width,
                double darkness, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> alpha(static_cast<std::size_t>(img.width) * img.height, 0.0f);
  const double half = width / 2.0;

  double x = x0;
  double y = y0;
  double walked = 0.0;
  while (walked < length) {
    const double step = rng.uniform(5.0, 12.0);
    heading += rng.uniform(-0.55, 0.55);
    const double nx = x + step * std::cos(heading);
    const double ny = y + step * std::sin(heading);

    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(x, nx) - half - 1)));
    const int x_hi = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(x, nx) + half + 1)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(y, ny) - half - 1)));
    const int y_hi = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(y, ny) + half + 1)));
    for (int py = y_lo; py <= y_hi; ++py) {
      for (int px = x_lo; px <= x_hi; ++px) {
        const double d = segment_distance(px + 0.5, py + 0.5, x, y, nx, ny);
        const double a = std::clamp(half + 0.5 - d, 0.0, 1.0);
        float& slot = alpha[static_cast<std::size_t>(py) * img.width + px];
        slot = std::max(slot, static_cast<float>(a));
      }
    }
    x = nx;
    y = ny;
    walked += step;
    if (x < -half || y < -half || x > img.width + half || y > img.height + half) break;
  }

  for (int py = 0; py < img.height; ++py) {
    for (int px = 0; px < img.width; ++px) {
      const float a = alpha[static_cast<std::size_t>(py) * img.width + px];
      if (a <= 0.0f) continue;
      const double gain = 1.0 - a * (1.0 - darkness);
      for (int c = 0; c < img.channels; ++c) {
        auto& v = img.at(px, py, c);
        v = static_cast<std::uint8_t>(std::lround(v * gain));
      }
    }
  }
}

ImageBuffer synth_image(const SynthConfig& cfg, Label label, int index) {
  validate(cfg);
  const std::uint64_t key = splitmix64(cfg.seed ^ splitmix64((static_cast<std::uint64_t>(label) << 32) ^
                                                            static_cast<std::uint64_t>(index)));
  Rng rng(key);
  ImageBuffer img = background(cfg, rng);
  if (label == Label::Negative) return img;

  const int cracks = rng.integer(cfg.crack_count.min, cfg.crack_count.max);
  const double extent = std::max(cfg.width, cfg.height);
  for (int i = 0; i < cracks; ++i) {
    const double x0 = rng.uniform(0.1, 0.9) * cfg.width;
    const double y0 = rng.uniform(0.1, 0.9) * cfg.height;
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double length = rng.uniform(0.5, 1.2) * extent;
    const double width = rng.uniform(cfg.crack_width_px.min, cfg.crack_width_px.max);
    const double darkness = rng.uniform(0.2, 0.45);
    draw_crack(img, x0, y0, heading, length, width, darkness, rng.next());
  }
  return img;
}

std::vector<LabeledSample> synth_samples(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(cfg.n_per_class) * 2);
  for (Label label : {Label::Negative, Label::Positive}) {
    for (int i = 0; i < cfg.n_per_class; ++i) {
      out.push_back(LabeledSample{synth_image(cfg, label, i), label,
                                  std::string(label == Label::Positive ? "positive/" : "negative/") +
                                      std::to_string(i)});
    }
  }
  return out;
}

std::vector<ManifestEntry> gen_synthetic_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  std::error_code ec;
  for (const char* dir : {"positive", "negative"}) {
    fs::create_directories(out_dir / dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + (out_dir / dir).string() + ": " + ec.message());
  }

  std::vector<ManifestEntry> manifest;
  for (Label label : {Label::Negative, Label::Positive}) {
    const std::string dir = label == Label::Positive ? "positive" : "negative";
    for (int i = 0; i < cfg.n_per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%05d.ppm", i);
      const std::string rel = dir + "/" + name;
      write_image(synth_image(cfg, label, i), out_dir / rel);
      manifest.push_back(ManifestEntry{rel, label});
    }
  }

  std::ofstream out(out_dir / "manifest.txt", std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write manifest in " + out_dir.string());
  out << "# path label\n";
  for (const auto& e : manifest) out << e.path << ' ' << to_string(e.label) << '\n';
  if (!out) throw Error(Errc::IoError, "short write to manifest");
  return manifest;
}

}  // namespace edgecrack
