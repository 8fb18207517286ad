#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <future>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tripgrid/collection/ckl.hpp"
#include "tripgrid/collection/dedup.hpp"
#include "tripgrid/collection/grid.hpp"
#include "tripgrid/collection/sampling.hpp"
#include "tripgrid/core/metrics.hpp"
#include "tripgrid/core/tste.hpp"
#include "tripgrid/econ/econ.hpp"
#include "tripgrid/harness/config.hpp"
#include "tripgrid/oracle/ground_truth.hpp"
#include "tripgrid/oracle/worker.hpp"

namespace tripgrid::harness {

struct CurvePoint {
  std::size_t screens = 0;
  std::size_t triplets_total = 0;
  std::size_t triplets_unique = 0;
  double dollars = 0.0;
  double tge = 0.5;
  double loo_nn = 0.0;
  // Set when no triplets were available; tge then holds the chance value.
  bool empty_fit = false;
};

struct Curve {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> points;
};

// ---- seeding -----------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent stream per (seed, name, purpose); stable across runs and thread schedules.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view name, std::string_view purpose) {
  return splitmix64(splitmix64(seed ^ fnv1a(name)) ^ fnv1a(purpose));
}

// ---- datasets ----------------------------------------------------------------

inline GroundTruth materialize_dataset(const DatasetSpec& spec, std::uint64_t seed, const TsteConfig& tste) {
  switch (spec.kind) {
    case DatasetKind::mixture:
      return generate_mixture_dataset(spec.n_points, spec.n_clusters, spec.dim, spec.spread,
                                      stream_seed(seed, "dataset", "mixture"));
    case DatasetKind::vectors: return load_vectors(spec.path);
    case DatasetKind::triplets: {
      TsteConfig cfg = tste;
      cfg.seed = stream_seed(seed, "dataset", "bootstrap");
      return bootstrap_ground_truth(spec.path, spec.n_objects, spec.dim, cfg);
    }
  }
  throw ArgumentError("unknown dataset kind");
}

/// Uniformly random questions answered by the true geometry (nearer wins, lower id on ties).
inline std::vector<Triplet> sample_heldout(const GroundTruth& gt, std::size_t count, Rng& rng) {
  const std::size_t n = gt.vectors.n_points();
  std::vector<Triplet> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto q = sample_random_triplet_question(n, rng);
    const double db = gt.vectors.squared_distance(q.probe, q.b);
    const double dc = gt.vectors.squared_distance(q.probe, q.c);
    out.push_back(db <= dc ? Triplet{q.probe, q.b, q.c} : Triplet{q.probe, q.c, q.b});
  }
  return out;
}

// ---- collection ----------------------------------------------------------------

/// Runs one strategy against the oracle, one screen at a time.
class Collector {
 public:
  Collector(const ExperimentConfig& config, const Strategy& strategy, std::uint64_t seed, const GroundTruth& gt)
      : config_(config),
        strategy_(strategy),
        seed_(seed),
        gt_(gt),
        rng_(stream_seed(seed, strategy.label(), "questions")),
        worker_(worker_model(config.worker, seed, strategy)) {
    strategy_.validate();
    if (strategy_.kind == StrategyKind::ckl) current_ = tste_initialization(n_objects(), fit_config("ckl-refit"));
  }

  std::size_t n_objects() const { return gt_.vectors.n_points(); }
  std::size_t screens() const noexcept { return screens_; }
  const TripletStore& store() const noexcept { return store_; }

  void step() {
    switch (strategy_.kind) {
      case StrategyKind::random_triplet: {
        const auto q = sample_random_triplet_question(n_objects(), rng_);
        store_.add(oracle_answer_triplet(gt_, q, worker_));
        break;
      }
      case StrategyKind::grid: {
        const auto task = sample_random_grid(n_objects(), strategy_.grid, rng_, screens_);
        const auto answer = oracle_answer_grid(gt_, task, worker_);
        store_.add(expand_grid_answer(task, answer));
        break;
      }
      case StrategyKind::ckl: {
        const auto answered = store_.triplets_in_arrival_order();
        if (screens_ > 0 && screens_ % config_.ckl_refit_every == 0) {
          current_ = tste_fit(answered, n_objects(), fit_config("ckl-refit"));
        }
        const auto choice = ckl_select_question(current_, n_objects(), answered, strategy_.ckl, rng_);
        store_.add(oracle_answer_triplet(gt_, choice.question, worker_));
        break;
      }
    }
    ++screens_;
  }

  double dollars() const {
    return strategy_.kind == StrategyKind::grid ? econ::screens_cost(screens_, config_.pricing)
                                                : econ::one_at_a_time_cost(screens_, config_.pricing);
  }

  TsteConfig fit_config(std::string_view purpose) const {
    TsteConfig cfg = config_.tste;
    cfg.dim = config_.embed_dim;
    cfg.seed = stream_seed(seed_ ^ config_.tste.seed, strategy_.label(), purpose);
    return cfg;
  }

 private:
  static WorkerModel worker_model(WorkerModel m, std::uint64_t seed, const Strategy& s) {
    m.seed = stream_seed(seed ^ m.seed, s.label(), "worker");
    return m;
  }

  const ExperimentConfig& config_;
  Strategy strategy_;
  std::uint64_t seed_;
  const GroundTruth& gt_;
  Rng rng_;
  Worker worker_;
  TripletStore store_;
  Embedding current_{1, 1};
  std::size_t screens_ = 0;
};

struct Evaluation {
  double tge = 0.5;
  double loo_nn = 0.0;
  bool empty_fit = false;
};

inline Evaluation evaluate_triplets(std::span<const Triplet> train, const GroundTruth& gt,
                                    std::span<const Triplet> heldout, const TsteConfig& fit) {
  if (train.empty()) return {0.5, 0.0, true};
  const auto emb = tste_fit(train, gt.vectors.n_points(), fit);
  Evaluation e;
  e.tge = triplet_generalization_error(emb, heldout);
  e.loo_nn = gt.labels.size() == emb.n_points() && emb.n_points() >= 2 ? loo_nn_error(emb, gt.labels) : 0.0;
  return e;
}

inline Curve run_strategy(const ExperimentConfig& config, const Strategy& strategy, std::uint64_t seed,
                          const GroundTruth& gt, std::span<const Triplet> heldout) {
  Curve curve{strategy.label(), seed, {}};
  Collector collector(config, strategy, seed, gt);
  for (std::size_t checkpoint : config.checkpoints) {
    if (checkpoint > config.budget_screens) break;
    while (collector.screens() < checkpoint) collector.step();
    const auto train = collector.store().triplets();
    const auto e = evaluate_triplets(train, gt, heldout, collector.fit_config("checkpoint"));
    curve.points.push_back({collector.screens(), collector.store().raw_count(), collector.store().unique_count(),
                            collector.dollars(), e.tge, e.loo_nn, e.empty_fit});
  }
  return curve;
}

struct SeedContext {
  GroundTruth gt;
  std::vector<Triplet> heldout;
};

inline SeedContext make_seed_context(const ExperimentConfig& config, std::uint64_t seed) {
  SeedContext ctx{materialize_dataset(config.dataset, seed, config.tste), {}};
  Rng rng(stream_seed(seed, "heldout", "questions"));
  ctx.heldout = sample_heldout(ctx.gt, config.heldout_triplets, rng);
  return ctx;
}

/// Runs every (strategy, seed) pair. Curves come back strategy-major, seeds in config order,
/// independent of thread count.
inline std::vector<Curve> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<SeedContext> contexts;
  contexts.reserve(config.seeds.size());
  for (auto seed : config.seeds) contexts.push_back(make_seed_context(config, seed));

  const std::size_t n_seeds = config.seeds.size();
  std::vector<Curve> curves(config.strategies.size() * n_seeds);
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, curves.size()));

  auto job = [&](std::size_t idx) {
    const auto& s = config.strategies[idx / n_seeds];
    const auto& ctx = contexts[idx % n_seeds];
    curves[idx] = run_strategy(config, s, config.seeds[idx % n_seeds], ctx.gt, ctx.heldout);
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < curves.size(); ++i) job(i);
    return curves;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < curves.size(); i = next++) job(i);
    }));
  }
  for (auto& w : workers) w.get();
  return curves;
}

// ---- equal-triplet comparison ----------------------------------------------------

struct TripletBudgetResult {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t unique_triplets = 0;
  std::size_t screens = 0;
  double tge = 0.5;
  double loo_nn = 0.0;
};

/// Collects until at least `target_unique` distinct triplets exist, keeps the first
/// `target_unique` in arrival order and evaluates a fit on exactly those.
inline TripletBudgetResult run_to_unique_triplets(const ExperimentConfig& config, const Strategy& strategy,
                                                  std::uint64_t seed, const GroundTruth& gt,
                                                  std::span<const Triplet> heldout, std::size_t target_unique) {
  const std::size_t capacity = unique_triplet_capacity(gt.vectors.n_points());
  if (target_unique > capacity) throw ArgumentError("target exceeds the number of distinct triplets");
  Collector collector(config, strategy, seed, gt);
  while (collector.store().unique_count() < target_unique) collector.step();
  auto train = collector.store().triplets_in_arrival_order();
  train.resize(target_unique);
  const auto e = evaluate_triplets(train, gt, heldout, collector.fit_config("checkpoint"));
  return {strategy.label(), seed, target_unique, collector.screens(), e.tge, e.loo_nn};
}

// ---- reference embeddings and occurrence distributions -----------------------------

/// Expands and deduplicates collected grid answers, then fits them.
inline Embedding build_reference_embedding(std::span<const std::pair<GridTask, GridAnswer>> answers,
                                           std::size_t n_objects, const TsteConfig& config) {
  if (answers.empty()) throw ArgumentError("no answers to build a reference embedding from");
  TripletStore store;
  for (const auto& [task, answer] : answers) {
    validate_task(task);
    if (task.probe >= n_objects) throw ConstraintError("probe index out of range");
    for (auto id : task.grid)
      if (id >= n_objects) throw ConstraintError("grid object index out of range");
    store.add(expand_grid_answer(task, answer));
  }
  return tste_fit(store.triplets(), n_objects, config);
}

struct DistributionConfig {
  std::size_t n_objects = 100;
  std::size_t n_clusters = 10;
  std::size_t dim = 2;
  double spread = 1.0;
  GridSpec grid{16, 4};
  // Raw triplets per strategy. The last grid answer is truncated when the count is not a multiple of k(n-k).
  std::size_t triplets = 59520;
  std::uint64_t seed = 1;
};

struct DistributionResult {
  std::size_t grid_screens = 0;
  std::size_t triplets = 0;
  OccurrenceStats grid;
  OccurrenceStats random;
};

/// Occurrence histograms for grid and random collection at equal raw triplet counts.
inline DistributionResult reproduce_distribution_figure(const DistributionConfig& cfg) {
  cfg.grid.validate();
  const auto gt = generate_mixture_dataset(cfg.n_objects, cfg.n_clusters, cfg.dim, cfg.spread,
                                           stream_seed(cfg.seed, "dataset", "mixture"));
  Worker worker;
  Rng grid_rng(stream_seed(cfg.seed, "grid", "questions"));
  Rng random_rng(stream_seed(cfg.seed, "random_triplet", "questions"));

  DistributionResult r;
  std::vector<Triplet> grid_triplets;
  grid_triplets.reserve(cfg.triplets);
  while (grid_triplets.size() < cfg.triplets) {
    const auto task = sample_random_grid(cfg.n_objects, cfg.grid, grid_rng, r.grid_screens++);
    const auto ts = expand_grid_answer(task, oracle_answer_grid(gt, task, worker));
    grid_triplets.insert(grid_triplets.end(), ts.begin(), ts.end());
  }
  grid_triplets.resize(cfg.triplets);
  std::vector<Triplet> random_triplets;
  random_triplets.reserve(cfg.triplets);
  while (random_triplets.size() < cfg.triplets) {
    random_triplets.push_back(oracle_answer_triplet(gt, sample_random_triplet_question(cfg.n_objects, random_rng), worker));
  }
  r.triplets = cfg.triplets;
  r.grid = occurrence_stats(grid_triplets, cfg.n_objects);
  r.random = occurrence_stats(random_triplets, cfg.n_objects);
  return r;
}

}  // namespace tripgrid::harness
