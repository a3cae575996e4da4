// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "edgecrack/graph.hpp"

namespace edgecrack {

/// Conv widths of the hand-built classifier: one channel per line detector
/// (center-surround, vertical, horizontal, diagonal, anti-diagonal).
inline constexpr std::array<int, 6> kHandcraftedChannels{5, 5, 5, 5, 5, 5};
inline constexpr int kHandcraftedHidden = 2;

/// Reference topology with analytically chosen weights that flag thin dark
/// lines on a lighter texture. Ends in a Softmax over {Negative, Positive}.
ModelGraph build_handcrafted_model();

}  // namespace edgecrack
