#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tripgrid/error.hpp"

namespace tripgrid {

/// Dense row-major N x d coordinate matrix.
class Embedding {
 public:
  Embedding() = default;

  Embedding(std::size_t n_points, std::size_t dim)
      : n_(n_points), d_(dim), coords_(n_points * dim, 0.0) {
    if (n_points < 1 || dim < 1) throw ArgumentError("embedding needs N >= 1 and d >= 1");
  }

  Embedding(std::size_t n_points, std::size_t dim, std::vector<double> coords)
      : n_(n_points), d_(dim), coords_(std::move(coords)) {
    if (n_points < 1 || dim < 1) throw ArgumentError("embedding needs N >= 1 and d >= 1");
    if (coords_.size() != n_points * dim) {
      throw ArgumentError("embedding coordinate count " + std::to_string(coords_.size()) +
                          " != " + std::to_string(n_points) + "x" + std::to_string(dim));
    }
  }

  std::size_t n_points() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }

  std::span<double> row(std::size_t i) { return {coords_.data() + i * d_, d_}; }
  std::span<const double> row(std::size_t i) const { return {coords_.data() + i * d_, d_}; }

  double& operator()(std::size_t i, std::size_t j) { return coords_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return coords_[i * d_ + j]; }

  std::span<double> data() { return coords_; }
  std::span<const double> data() const { return coords_; }

  bool all_finite() const {
    for (double v : coords_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void require_finite() const {
    if (!all_finite()) throw NumericError("embedding contains non-finite coordinates");
  }

  double squared_distance(std::size_t i, std::size_t j) const {
    const double* a = coords_.data() + i * d_;
    const double* b = coords_.data() + j * d_;
    double s = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
      const double diff = a[k] - b[k];
      s += diff * diff;
    }
    return s;
  }

  double distance(std::size_t i, std::size_t j) const { return std::sqrt(squared_distance(i, j)); }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> coords_;
};

}  // namespace tripgrid
