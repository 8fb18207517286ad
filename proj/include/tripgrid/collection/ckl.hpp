#pragma once

// Adaptive single-triplet selection in the style of Crowd Kernel Learning.
//
// Answer model: p(b closer to a than c) = (|x_a - x_c|^2 + mu) / (|x_a - x_b|^2 + |x_a - x_c|^2 + 2 mu).
// Posterior over the probe's location: its current position plus Gaussian
// perturbations, weighted by the likelihood of the already answered triplets
// that involve the probe. A candidate's score is the mutual information
// H(E[p]) - E[H(p)] between the answer and that location.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "tripgrid/collection/sampling.hpp"
#include "tripgrid/core/embedding.hpp"
#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

struct CklConfig {
  double mu = 0.05;
  std::size_t pool_size = 20;
  std::size_t posterior_samples = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(mu > 0.0)) throw ArgumentError("ckl: mu must be > 0");
    if (pool_size < 1) throw ArgumentError("ckl: pool_size must be >= 1");
    if (posterior_samples < 2) throw ArgumentError("ckl: posterior_samples must be >= 2");
  }
};

struct CklChoice {
  TripletQuestion question;
  double gain = 0.0;
  // Set when the embedding was degenerate and the question is uniform random.
  bool fallback = false;
};

/// Entropy of a Bernoulli(p) variable in bits.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

inline double ckl_probability(double sq_dist_near, double sq_dist_far, double mu) {
  return (sq_dist_far + mu) / (sq_dist_near + sq_dist_far + 2.0 * mu);
}

/// Median Euclidean distance over all unordered pairs; 0 for fewer than 2 points.
inline double median_pairwise_distance(const Embedding& emb) {
  const std::size_t n = emb.n_points();
  if (n < 2) return 0.0;
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dists.push_back(emb.distance(i, j));
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  if (dists.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(dists.begin(), mid);
  return 0.5 * (lower + upper);
}

/// Information gain of asking `q`, with the probe's posterior represented by
/// `offsets` (each of length dim) added to its current position.
/// `probe_history` are answered triplets in which q.probe appears in any role.
inline double ckl_information_gain(const Embedding& current, std::span<const Triplet> probe_history,
                                   const TripletQuestion& q, double mu,
                                   std::span<const std::vector<double>> offsets) {
  const std::size_t d = current.dim();
  const std::size_t samples = offsets.size();
  if (samples == 0) throw ArgumentError("ckl: need at least one posterior sample");

  std::vector<double> z(d);
  auto sq_dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double xi = i == q.probe ? z[k] : current(i, k);
      const double xj = j == q.probe ? z[k] : current(j, k);
      s += (xi - xj) * (xi - xj);
    }
    return s;
  };

  std::vector<double> log_w(samples, 0.0);
  std::vector<double> p(samples, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    if (offsets[s].size() != d) throw ArgumentError("ckl: offset dimension mismatch");
    for (std::size_t k = 0; k < d; ++k) z[k] = current(q.probe, k) + offsets[s][k];
    for (const auto& t : probe_history) {
      log_w[s] += std::log(ckl_probability(sq_dist(t.probe, t.near), sq_dist(t.probe, t.far), mu));
    }
    p[s] = ckl_probability(sq_dist(q.probe, q.b), sq_dist(q.probe, q.c), mu);
  }

  const double max_log_w = *std::max_element(log_w.begin(), log_w.end());
  double w_sum = 0.0;
  for (double& lw : log_w) {
    lw = std::exp(lw - max_log_w);
    w_sum += lw;
  }
  double mean_p = 0.0;
  double mean_h = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double w = log_w[s] / w_sum;
    mean_p += w * p[s];
    mean_h += w * binary_entropy(p[s]);
  }
  return binary_entropy(mean_p) - mean_h;
}

/// Draws pool_size uniform candidates and returns the one with the largest
/// information gain (earliest draw wins ties). For each candidate, in draw
/// order, posterior_samples - 1 Gaussian offsets are drawn after the pool;
/// the first sample is the unperturbed position.
inline CklChoice ckl_select_question(const Embedding& current, std::size_t n_objects,
                                     std::span<const Triplet> answered, const CklConfig& config, Rng& rng) {
  config.validate();
  if (current.n_points() != n_objects) throw ArgumentError("ckl: embedding rows != n_objects");
  if (n_objects < 3) throw ArgumentError("ckl: need at least 3 objects");
  validate_triplets(answered, n_objects);

  const double scale = median_pairwise_distance(current) / 4.0;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    return {sample_random_triplet_question(n_objects, rng), 0.0, true};
  }

  std::vector<TripletQuestion> pool;
  pool.reserve(config.pool_size);
  for (std::size_t i = 0; i < config.pool_size; ++i) pool.push_back(sample_random_triplet_question(n_objects, rng));

  std::vector<std::vector<std::size_t>> involving(n_objects);
  for (std::size_t i = 0; i < answered.size(); ++i) {
    involving[answered[i].probe].push_back(i);
    involving[answered[i].near].push_back(i);
    involving[answered[i].far].push_back(i);
  }

  std::normal_distribution<double> normal(0.0, scale);
  std::vector<std::vector<double>> offsets(config.posterior_samples, std::vector<double>(current.dim(), 0.0));
  std::vector<Triplet> history;
  CklChoice best{pool.front(), -std::numeric_limits<double>::infinity(), false};
  for (const auto& q : pool) {
    for (std::size_t s = 1; s < offsets.size(); ++s)
      for (double& v : offsets[s]) v = normal(rng);
    history.clear();
    for (std::size_t idx : involving[q.probe]) history.push_back(answered[idx]);
    const double gain = ckl_information_gain(current, history, q, config.mu, offsets);
    if (gain > best.gain) best = {q, gain, false};
  }
  return best;
}

}  // namespace tripgrid
