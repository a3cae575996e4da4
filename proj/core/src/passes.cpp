// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/passes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "edgecrack/error.hpp"

namespace edgecrack {

void prune_tensor(std::span<float> weights, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw Error(Errc::InvalidSparsity, std::to_string(sparsity) + " not in [0, 1)");
  }
  const auto n = weights.size();
  const auto target = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(n)));
  if (target == 0) return;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(weights[a]) < std::abs(weights[b]);
  });
  for (std::size_t i = 0; i < target; ++i) weights[order[i]] = 0.0f;
}

ModelGraph prune_magnitude(const ModelGraph& model, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw Error(Errc::InvalidSparsity, std::to_string(sparsity) + " not in [0, 1)");
  }
  ModelGraph out = model;
  for (const auto& node : out.nodes) {
    if (!has_parameters(node.kind)) continue;
    prune_tensor(out.weights.at(node.weight()), sparsity);
  }
  return out;
}

namespace {

std::size_t nearest(const std::vector<double>& centroids, double v) {
  std::size_t best = 0;
  double best_d = std::abs(v - centroids[0]);
  for (std::size_t j = 1; j < centroids.size(); ++j) {
    const double d = std::abs(v - centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

double sse(std::span<const float> w, const std::vector<std::size_t>& assign,
           const std::vector<double>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - centroids[assign[i]];
    total += d * d;
  }
  return total;
}

}  // namespace

ClusterResult cluster_tensor(std::span<const float> weights, int k, int max_iters) {
  if (k < 2) throw Error(Errc::InvalidK, "k must be >= 2, got " + std::to_string(k));
  if (max_iters < 0) throw Error(Errc::InvalidK, "max_iters must be >= 0");

  ClusterResult r;
  r.values.assign(weights.begin(), weights.end());
  const std::set<float> distinct(weights.begin(), weights.end());
  if (distinct.size() <= static_cast<std::size_t>(k)) {
    r.centroids.assign(distinct.begin(), distinct.end());
    r.sse_history.push_back(0.0);
    return r;
  }

  const double lo = *distinct.begin();
  const double hi = *distinct.rbegin();
  r.centroids.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) r.centroids[j] = lo + (hi - lo) * j / (k - 1);

  std::vector<std::size_t> assign(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) assign[i] = nearest(r.centroids, weights[i]);
  r.sse_history.push_back(sse(weights, assign, r.centroids));

  std::vector<double> sum(r.centroids.size());
  std::vector<std::size_t> count(r.centroids.size());
  for (int it = 0; it < max_iters; ++it) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      sum[assign[i]] += weights[i];
      ++count[assign[i]];
    }
    for (std::size_t j = 0; j < r.centroids.size(); ++j) {
      if (count[j] > 0) r.centroids[j] = sum[j] / static_cast<double>(count[j]);
    }
    r.sse_history.push_back(sse(weights, assign, r.centroids));
    ++r.iterations;

    bool changed = false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const std::size_t j = nearest(r.centroids, weights[i]);
      changed |= j != assign[i];
      assign[i] = j;
    }
    if (!changed) break;
    r.sse_history.push_back(sse(weights, assign, r.centroids));
  }

  for (std::size_t i = 0; i < weights.size(); ++i) {
    r.values[i] = static_cast<float>(r.centroids[assign[i]]);
  }
  return r;
}

ModelGraph cluster_weights(const ModelGraph& model, int k, int max_iters) {
  if (k < 2) throw Error(Errc::InvalidK, "k must be >= 2, got " + std::to_string(k));
  ModelGraph out = model;
  for (const auto& node : out.nodes) {
    if (!has_parameters(node.kind)) continue;
    auto& w = out.weights.at(node.weight());
    w = cluster_tensor(w, k, max_iters).values;
  }
  return out;
}

}  // namespace edgecrack
