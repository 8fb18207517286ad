#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check beyond the objective being differentiated.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tripgrid/core/embedding.hpp"
#include "tripgrid/core/triplet.hpp"

namespace tripgrid::testing {

/// Central finite differences of `f` at every coordinate of `x`.
inline Embedding finite_difference_gradient(const std::function<double(const Embedding&)>& f, const Embedding& x,
                                            double step = 1e-5) {
  Embedding grad(x.n_points(), x.dim());
  Embedding probe = x;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + step;
    const double up = f(probe);
    probe.data()[i] = orig - step;
    const double down = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Largest entry-wise relative error; entries where both magnitudes are below `floor` are skipped.
inline double max_relative_error(const Embedding& a, const Embedding& b, double floor = 1e-10) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double x = a.data()[i];
    const double y = b.data()[i];
    const double scale = std::max(std::abs(x), std::abs(y));
    if (scale < floor) continue;
    worst = std::max(worst, std::abs(x - y) / scale);
  }
  return worst;
}

/// Every (probe, unordered pair) of `n` objects, oriented by Euclidean distance in
/// `truth` (lower id is near on ties).
inline std::vector<Triplet> all_oriented_triplets(const Embedding& truth) {
  const auto n = static_cast<ObjectId>(truth.n_points());
  std::vector<Triplet> out;
  for (ObjectId a = 0; a < n; ++a)
    for (ObjectId b = 0; b < n; ++b)
      for (ObjectId c = b + 1; c < n; ++c) {
        if (a == b || a == c) continue;
        const double db = std::sqrt(truth.squared_distance(a, b));
        const double dc = std::sqrt(truth.squared_distance(a, c));
        out.push_back(db <= dc ? Triplet{a, b, c} : Triplet{a, c, b});
      }
  return out;
}

inline Embedding random_embedding(std::size_t n, std::size_t d, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Embedding e(n, d);
  for (double& v : e.data()) v = normal(rng);
  return e;
}

inline std::vector<Triplet> random_triplets(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<ObjectId> pick(0, static_cast<ObjectId>(n - 1));
  std::vector<Triplet> out;
  while (out.size() < count) {
    Triplet t{pick(rng), pick(rng), pick(rng)};
    if (t.probe == t.near || t.probe == t.far || t.near == t.far) continue;
    out.push_back(t);
  }
  return out;
}

/// Count of violated constraints, written independently of the library metric.
inline std::size_t count_violations(const Embedding& emb, const std::vector<Triplet>& ts) {
  std::size_t v = 0;
  for (const auto& t : ts) {
    double dn = 0.0, df = 0.0;
    for (std::size_t k = 0; k < emb.dim(); ++k) {
      dn += (emb(t.probe, k) - emb(t.near, k)) * (emb(t.probe, k) - emb(t.near, k));
      df += (emb(t.probe, k) - emb(t.far, k)) * (emb(t.probe, k) - emb(t.far, k));
    }
    if (!(dn < df)) ++v;
  }
  return v;
}

}  // namespace tripgrid::testing
