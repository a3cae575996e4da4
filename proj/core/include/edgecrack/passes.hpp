// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "edgecrack/graph.hpp"

namespace edgecrack {

/// Zeroes the floor(sparsity * n) smallest-magnitude entries of every weight
/// tensor; ties go to the lower flat index. Biases are left alone.
ModelGraph prune_magnitude(const ModelGraph& model, double sparsity);

void prune_tensor(std::span<float> weights, double sparsity);

struct ClusterResult {
  std::vector<float> values;      // each weight replaced by its centroid
  std::vector<double> centroids;
  std::vector<double> sse_history;  // SSE after each assignment step
  int iterations = 0;
};

/// Scalar Lloyd's k-means with centroids spread evenly over [min, max].
/// Tensors with at most k distinct values come back unchanged.
ClusterResult cluster_tensor(std::span<const float> weights, int k, int max_iters);

/// Applies cluster_tensor to every weight tensor (biases are left alone).
ModelGraph cluster_weights(const ModelGraph& model, int k, int max_iters);

}  // namespace edgecrack
