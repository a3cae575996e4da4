// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/reference_model.hpp"

#include <array>

namespace edgecrack {

namespace {

using Kernel = std::array<std::array<float, 3>, 3>;

// Each detector answers "how much darker is the marked line than the rest of
// the 3x3 window", so a flat patch scores 0 and a thin dark line scores high.
constexpr float kLine = -1.0f / 3.0f;
constexpr float kSide = 1.0f / 6.0f;

constexpr std::array<Kernel, 5> kDetectors{{
    // center-surround
    {{{0.125f, 0.125f, 0.125f}, {0.125f, -1.0f, 0.125f}, {0.125f, 0.125f, 0.125f}}},
    // vertical line
    {{{kSide, kLine, kSide}, {kSide, kLine, kSide}, {kSide, kLine, kSide}}},
    // horizontal line
    {{{kSide, kSide, kSide}, {kLine, kLine, kLine}, {kSide, kSide, kSide}}},
    // diagonal
    {{{kLine, kSide, kSide}, {kSide, kLine, kSide}, {kSide, kSide, kLine}}},
    // anti-diagonal
    {{{kSide, kSide, kLine}, {kSide, kLine, kSide}, {kLine, kSide, kSide}}},
}};

// Detector output below this is texture, not a crack.
constexpr float kDetectorFloor = 0.06f;
// Summed crack evidence over the final 3x3 grid that separates the classes.
constexpr float kEvidenceThreshold = 0.35f;
constexpr float kLogitGain = 8.0f;

void set_conv_weight(std::vector<float>& w, int in_c, int o, int ky, int kx, int c, float v) {
  w[((static_cast<std::size_t>(o) * 3 + ky) * 3 + kx) * in_c + c] = v;
}

}  // namespace

ModelGraph build_handcrafted_model() {
  ModelGraph g = build_reference_net(kHandcraftedChannels, kHandcraftedHidden);
  g.name = "crack_cnn_handcrafted";

  auto& w1 = g.weights.at("conv1_w");
  auto& b1 = g.weights.at("conv1_b");
  for (int o = 0; o < 5; ++o) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        for (int c = 0; c < 3; ++c) set_conv_weight(w1, 3, o, ky, kx, c, kDetectors[o][ky][kx] / 3.0f);
      }
    }
    b1[o] = -kDetectorFloor;
  }

  // conv2..conv5 carry each detector map forward unchanged so the pools
  // compute a block-wise max. conv6 sums the 3x3 neighbourhood so the
  // row/column dropped by the final 7 -> 3 pool still counts.
  for (int layer = 2; layer <= 6; ++layer) {
    auto& w = g.weights.at("conv" + std::to_string(layer) + "_w");
    for (int o = 0; o < 5; ++o) {
      if (layer < 6) {
        set_conv_weight(w, 5, o, 1, 1, o, 1.0f);
      } else {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) set_conv_weight(w, 5, o, ky, kx, o, 1.0f);
        }
      }
    }
  }

  // fc1: h0 = relu(E - T), h1 = relu(T - E) with E the summed evidence.
  auto& fc1_w = g.weights.at("fc1_w");
  auto& fc1_b = g.weights.at("fc1_b");
  const std::size_t flat = fc1_w.size() / 2;
  for (std::size_t i = 0; i < flat; ++i) {
    fc1_w[i] = 1.0f;
    fc1_w[flat + i] = -1.0f;
  }
  fc1_b[0] = -kEvidenceThreshold;
  fc1_b[1] = kEvidenceThreshold;

  // fc2: logit[Negative] = gain * h1, logit[Positive] = gain * h0.
  auto& fc2_w = g.weights.at("fc2_w");
  fc2_w = {0.0f, kLogitGain, kLogitGain, 0.0f};
  return g;
}

}  // namespace edgecrack
