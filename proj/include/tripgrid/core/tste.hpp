#pragma once

// t-distributed Stochastic Triplet Embedding.
//
// For a triplet (a, b, c) the model probability is
//   p = K(a,b) / (K(a,b) + K(a,c)),  K(u,v) = (1 + |x_u - x_v|^2 / alpha)^(-(alpha+1)/2)
// and the fit maximizes sum_t log p_t by full-batch gradient ascent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "tripgrid/core/embedding.hpp"
#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

struct TsteConfig {
  std::size_t dim = 2;
  // Student-t degrees of freedom; unset means max(5, dim - 1). Heavier tails
  // (alpha near 1) leave a few percent of training triplets unsatisfiable in 2-D.
  std::optional<double> alpha;
  std::size_t max_iters = 1000;
  double learning_rate = 2.0;
  // Relative log-likelihood change below which an iteration counts as stalled.
  double tolerance = 1e-7;
  // Consecutive accepted steps with a stalled change before stopping.
  std::size_t patience = 5;
  double init_stddev = 1e-4;
  std::uint64_t seed = 0;

  double resolved_alpha() const {
    return alpha.value_or(std::max(5.0, static_cast<double>(dim) - 1.0));
  }

  void validate() const {
    if (dim < 1) throw ArgumentError("tste: dim must be >= 1");
    if (!(resolved_alpha() > 0.0)) throw ArgumentError("tste: alpha must be > 0");
    if (max_iters < 1) throw ArgumentError("tste: max_iters must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("tste: learning_rate must be > 0");
    if (!(tolerance > 0.0)) throw ArgumentError("tste: tolerance must be > 0");
    if (patience < 1) throw ArgumentError("tste: patience must be >= 1");
  }
};

struct TsteTrace {
  double initial_log_likelihood = 0.0;
  double final_log_likelihood = 0.0;
  std::size_t iterations = 0;
  std::size_t accepted_steps = 0;
  // Log-likelihood after every accepted step, starting with the initial value.
  std::vector<double> accepted_log_likelihoods;
};

namespace detail {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline void check_inputs(const Embedding& emb, std::span<const Triplet> triplets, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("tste: alpha must be finite and > 0");
  validate_triplets(triplets, emb.n_points());
  emb.require_finite();
}

// Shared pass computing the log-likelihood and, if `grad` is non-empty, its gradient.
inline double tste_evaluate(const Embedding& emb, std::span<const Triplet> triplets, double alpha,
                            std::span<double> grad) {
  const std::size_t d = emb.dim();
  const double exponent = (alpha + 1.0) / 2.0;
  const double coef = (alpha + 1.0) / alpha;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double ll = 0.0;
  for (const auto& t : triplets) {
    const double dab = emb.squared_distance(t.probe, t.near);
    const double dac = emb.squared_distance(t.probe, t.far);
    const double log_kab = -exponent * std::log1p(dab / alpha);
    const double log_kac = -exponent * std::log1p(dac / alpha);
    // log p = -log(1 + K_ac / K_ab)
    const double z = log_kac - log_kab;
    ll -= softplus(z);
    if (!want_grad) continue;

    // 1 - p = K_ac / (K_ab + K_ac) = sigmoid(z)
    const double one_minus_p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double g_ab = one_minus_p * coef / (1.0 + dab / alpha);
    const double g_ac = one_minus_p * coef / (1.0 + dac / alpha);
    const auto xa = emb.row(t.probe);
    const auto xb = emb.row(t.near);
    const auto xc = emb.row(t.far);
    double* ga = grad.data() + std::size_t{t.probe} * d;
    double* gb = grad.data() + std::size_t{t.near} * d;
    double* gc = grad.data() + std::size_t{t.far} * d;
    for (std::size_t k = 0; k < d; ++k) {
      const double ab = xa[k] - xb[k];
      const double ac = xa[k] - xc[k];
      ga[k] += -g_ab * ab + g_ac * ac;
      gb[k] += g_ab * ab;
      gc[k] -= g_ac * ac;
    }
  }
  return ll;
}

}  // namespace detail

inline double tste_log_likelihood(const Embedding& emb, std::span<const Triplet> triplets, double alpha) {
  detail::check_inputs(emb, triplets, alpha);
  return detail::tste_evaluate(emb, triplets, alpha, {});
}

/// Gradient of tste_log_likelihood with respect to every coordinate, same shape as `emb`.
inline Embedding tste_gradient(const Embedding& emb, std::span<const Triplet> triplets, double alpha) {
  detail::check_inputs(emb, triplets, alpha);
  Embedding grad(emb.n_points(), emb.dim());
  detail::tste_evaluate(emb, triplets, alpha, grad.data());
  return grad;
}

/// The i.i.d. Gaussian starting point used by tste_fit for this config.
inline Embedding tste_initialization(std::size_t n_points, const TsteConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_stddev);
  Embedding emb(n_points, config.dim);
  for (double& v : emb.data()) v = normal(rng);
  return emb;
}

/// Gradient ascent on the t-STE log-likelihood with step halving on rejected
/// moves and x1.01 growth on accepted ones. Empty input returns the initialization.
inline Embedding tste_fit(std::span<const Triplet> triplets, std::size_t n_points, const TsteConfig& config,
                          TsteTrace* trace = nullptr) {
  config.validate();
  if (n_points < 1) throw ArgumentError("tste: n_points must be >= 1");
  if (required_points(triplets) > n_points) {
    throw ConstraintError("tste: triplet index exceeds n_points " + std::to_string(n_points));
  }
  validate_triplets(triplets, n_points);

  const double alpha = config.resolved_alpha();
  Embedding x = tste_initialization(n_points, config);
  if (trace) *trace = TsteTrace{};
  if (triplets.empty()) {
    if (trace) trace->accepted_log_likelihoods.push_back(0.0);
    return x;
  }

  // Step is scaled by N / |T| so the learning rate is insensitive to the triplet count.
  const double scale = static_cast<double>(n_points) / static_cast<double>(triplets.size());
  std::vector<double> grad(x.data().size());
  std::vector<double> cand_grad(grad.size());
  double ll = detail::tste_evaluate(x, triplets, alpha, grad);
  if (trace) {
    trace->initial_log_likelihood = ll;
    trace->accepted_log_likelihoods.push_back(ll);
  }

  Embedding cand = x;
  double lr = config.learning_rate;
  std::size_t stalled = 0;
  std::size_t iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const auto xs = x.data();
    auto cs = cand.data();
    const double step = lr * scale;
    for (std::size_t i = 0; i < cs.size(); ++i) cs[i] = xs[i] + step * grad[i];

    const double cand_ll = cand.all_finite() ? detail::tste_evaluate(cand, triplets, alpha, cand_grad)
                                             : -std::numeric_limits<double>::infinity();
    if (std::isfinite(cand_ll) && cand_ll >= ll) {
      const double rel = (cand_ll - ll) / std::max(std::abs(ll), 1e-300);
      std::swap(x, cand);
      std::swap(grad, cand_grad);
      ll = cand_ll;
      lr *= 1.01;
      if (trace) {
        ++trace->accepted_steps;
        trace->accepted_log_likelihoods.push_back(ll);
      }
      stalled = rel < config.tolerance ? stalled + 1 : 0;
    } else {
      lr *= 0.5;
    }
    if (stalled >= config.patience || lr < 1e-300) {
      ++iter;
      break;
    }
  }
  if (trace) {
    trace->final_log_likelihood = ll;
    trace->iterations = iter;
  }
  return x;
}

}  // namespace tripgrid
