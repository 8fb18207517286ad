#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "tripgrid/collection/grid.hpp"
#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

using Rng = std::mt19937_64;

/// An unanswered single-triplet question: which of {b, c} is closer to probe. b < c.
struct TripletQuestion {
  ObjectId probe = 0;
  ObjectId b = 0;
  ObjectId c = 0;

  friend bool operator==(const TripletQuestion&, const TripletQuestion&) = default;
};

inline std::size_t uniform_index(Rng& rng, std::size_t bound) {
  return std::uniform_int_distribution<std::size_t>(0, bound - 1)(rng);
}

inline TripletQuestion sample_random_triplet_question(std::size_t n_objects, Rng& rng) {
  if (n_objects < 3) throw ArgumentError("triplet question needs at least 3 objects");
  const auto probe = static_cast<ObjectId>(uniform_index(rng, n_objects));
  // u over the n-1 non-probe objects, v over the n-2 left after u.
  auto u = static_cast<ObjectId>(uniform_index(rng, n_objects - 1));
  auto v = static_cast<ObjectId>(uniform_index(rng, n_objects - 2));
  if (v >= u) ++v;
  if (u >= probe) ++u;
  if (v >= probe) ++v;
  return {probe, std::min(u, v), std::max(u, v)};
}

/// Uniform probe, then a uniformly random ordered sample of spec.n other objects.
inline GridTask sample_random_grid(std::size_t n_objects, const GridSpec& spec, Rng& rng, TaskId task_id = 0) {
  spec.validate();
  if (n_objects < spec.n + 1) {
    throw ArgumentError("grid of " + std::to_string(spec.n) + " needs at least " + std::to_string(spec.n + 1) +
                        " objects, have " + std::to_string(n_objects));
  }
  GridTask task;
  task.task_id = task_id;
  task.spec = spec;
  task.probe = static_cast<ObjectId>(uniform_index(rng, n_objects));

  std::vector<ObjectId> pool;
  pool.reserve(n_objects - 1);
  for (std::size_t i = 0; i < n_objects; ++i)
    if (i != task.probe) pool.push_back(static_cast<ObjectId>(i));
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(spec.n);
  task.grid = std::move(pool);
  return task;
}

struct OccurrenceStats {
  std::vector<std::size_t> histogram;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Counts every appearance of each object in any of the three roles.
/// mean = 3 |T| / N, stddev is the population standard deviation.
inline OccurrenceStats occurrence_stats(std::span<const Triplet> triplets, std::size_t n_objects) {
  if (n_objects < 1) throw ArgumentError("occurrence_stats needs n_objects >= 1");
  validate_triplets(triplets, n_objects);
  OccurrenceStats s;
  s.histogram.assign(n_objects, 0);
  for (const auto& t : triplets) {
    ++s.histogram[t.probe];
    ++s.histogram[t.near];
    ++s.histogram[t.far];
  }
  const double n = static_cast<double>(n_objects);
  s.mean = 3.0 * static_cast<double>(triplets.size()) / n;
  double ss = 0.0;
  for (std::size_t c : s.histogram) {
    const double diff = static_cast<double>(c) - s.mean;
    ss += diff * diff;
  }
  s.stddev = std::sqrt(ss / n);
  return s;
}

}  // namespace tripgrid
