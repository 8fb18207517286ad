#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include "tripgrid/core/embedding.hpp"
#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

/// Fraction of held-out triplets the embedding violates. A tie counts as a violation.
inline double triplet_generalization_error(const Embedding& emb, std::span<const Triplet> held_out) {
  if (held_out.empty()) throw ArgumentError("triplet_generalization_error: held_out is empty");
  validate_triplets(held_out, emb.n_points());
  std::size_t violated = 0;
  for (const auto& t : held_out) {
    if (emb.squared_distance(t.probe, t.near) >= emb.squared_distance(t.probe, t.far)) ++violated;
  }
  return static_cast<double>(violated) / static_cast<double>(held_out.size());
}

/// Leave-one-out 1-NN error: share of points whose nearest other point has a
/// different label. Distance ties go to the lowest index.
inline double loo_nn_error(const Embedding& emb, std::span<const std::int64_t> labels) {
  const std::size_t n = emb.n_points();
  if (n < 2) throw ArgumentError("loo_nn_error: need at least 2 points");
  if (labels.size() != n) throw ArgumentError("loo_nn_error: labels length != number of points");

  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = n;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist = emb.squared_distance(i, j);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best == n || labels[best] != labels[i]) ++mismatches;
  }
  return static_cast<double>(mismatches) / static_cast<double>(n);
}

}  // namespace tripgrid
