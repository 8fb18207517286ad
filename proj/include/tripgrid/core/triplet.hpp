#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "tripgrid/error.hpp"

namespace tripgrid {

using ObjectId = std::uint32_t;

/// Relative similarity constraint: d(probe, near) < d(probe, far).
struct Triplet {
  ObjectId probe = 0;
  ObjectId near = 0;
  ObjectId far = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;

  Triplet swapped() const { return {probe, far, near}; }
};

inline std::string to_string(const Triplet& t) {
  return "(" + std::to_string(t.probe) + "," + std::to_string(t.near) + "," +
         std::to_string(t.far) + ")";
}

inline void validate_triplet(const Triplet& t, std::size_t n_points) {
  if (t.probe >= n_points || t.near >= n_points || t.far >= n_points) {
    throw ConstraintError("triplet " + to_string(t) + " has index outside [0, " +
                          std::to_string(n_points) + ")");
  }
  if (t.probe == t.near || t.probe == t.far || t.near == t.far) {
    throw ConstraintError("triplet " + to_string(t) + " has repeated indices");
  }
}

inline void validate_triplets(std::span<const Triplet> triplets, std::size_t n_points) {
  for (const auto& t : triplets) validate_triplet(t, n_points);
}

/// Smallest N for which every index in `triplets` is valid (0 if empty).
inline std::size_t required_points(std::span<const Triplet> triplets) {
  std::size_t n = 0;
  for (const auto& t : triplets) {
    n = std::max<std::size_t>(n, std::size_t{t.probe} + 1);
    n = std::max<std::size_t>(n, std::size_t{t.near} + 1);
    n = std::max<std::size_t>(n, std::size_t{t.far} + 1);
  }
  return n;
}

}  // namespace tripgrid
