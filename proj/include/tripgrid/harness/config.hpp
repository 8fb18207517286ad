#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripgrid/collection/ckl.hpp"
#include "tripgrid/collection/grid.hpp"
#include "tripgrid/core/tste.hpp"
#include "tripgrid/econ/econ.hpp"
#include "tripgrid/error.hpp"
#include "tripgrid/oracle/worker.hpp"

namespace tripgrid::harness {

using nlohmann::json;

enum class StrategyKind { random_triplet, grid, ckl };

struct Strategy {
  StrategyKind kind = StrategyKind::random_triplet;
  GridSpec grid;
  CklConfig ckl;

  static Strategy random() { return {}; }
  static Strategy grid_of(std::size_t n, std::size_t k) { return {StrategyKind::grid, GridSpec{n, k}, {}}; }
  static Strategy ckl_with(CklConfig cfg = {}) { return {StrategyKind::ckl, {}, cfg}; }

  /// Stable name used in CSV output and for deriving random streams.
  std::string label() const {
    switch (kind) {
      case StrategyKind::random_triplet: return "random_triplet";
      case StrategyKind::grid: return "grid_" + std::to_string(grid.n) + "_choose_" + std::to_string(grid.k);
      case StrategyKind::ckl: return "ckl";
    }
    return "unknown";
  }

  void validate() const {
    if (kind == StrategyKind::grid) grid.validate();
    if (kind == StrategyKind::ckl) ckl.validate();
  }
};

enum class DatasetKind { mixture, vectors, triplets };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::mixture;
  // mixture
  std::size_t n_points = 200;
  std::size_t n_clusters = 10;
  std::size_t dim = 2;
  double spread = 1.0;
  // vectors / triplets
  std::string path;
  // triplets: object count for the bootstrapped ground truth (dim is reused as its dimension)
  std::size_t n_objects = 0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<Strategy> strategies{Strategy::random(), Strategy::grid_of(12, 4), Strategy::ckl_with()};
  std::size_t budget_screens = 600;
  std::vector<std::size_t> checkpoints{25, 50, 100, 200, 400, 600};
  std::size_t embed_dim = 2;
  TsteConfig tste;
  econ::HitPricing pricing;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t heldout_triplets = 10000;
  std::size_t ckl_refit_every = 50;
  WorkerModel worker;
  // 0 means one thread per hardware core.
  std::size_t threads = 0;

  void validate() const {
    if (strategies.empty()) throw ArgumentError("config: at least one strategy is required");
    for (const auto& s : strategies) s.validate();
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      if (checkpoints[i] < 1 || checkpoints[i] > budget_screens) {
        throw ArgumentError("config: checkpoint " + std::to_string(checkpoints[i]) + " outside [1, budget_screens]");
      }
      if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) throw ArgumentError("config: checkpoints must ascend strictly");
    }
    if (embed_dim < 1) throw ArgumentError("config: embed_dim must be >= 1");
    if (heldout_triplets < 1) throw ArgumentError("config: heldout_triplets must be >= 1");
    if (ckl_refit_every < 1) throw ArgumentError("config: ckl_refit_every must be >= 1");
    if (dataset.kind != DatasetKind::mixture && dataset.path.empty()) throw ArgumentError("config: dataset path missing");
    if (dataset.kind == DatasetKind::triplets && dataset.n_objects < 3) {
      throw ArgumentError("config: triplet dataset needs n_objects >= 3");
    }
    tste.validate();
    pricing.validate();
    worker.validate();
  }

  /// Replace the budget, dropping checkpoints beyond it (the budget itself becomes one if none remain).
  void set_budget(std::size_t budget) {
    budget_screens = budget;
    std::erase_if(checkpoints, [&](std::size_t c) { return c > budget; });
    if (checkpoints.empty() && budget > 0) checkpoints.push_back(budget);
  }
};

// ---- JSON mapping ------------------------------------------------------------

inline json to_json(const Strategy& s) {
  switch (s.kind) {
    case StrategyKind::random_triplet: return {{"kind", "random_triplet"}};
    case StrategyKind::grid: return {{"kind", "grid"}, {"n", s.grid.n}, {"k", s.grid.k}};
    case StrategyKind::ckl:
      return {{"kind", "ckl"},
              {"mu", s.ckl.mu},
              {"pool_size", s.ckl.pool_size},
              {"posterior_samples", s.ckl.posterior_samples},
              {"seed", s.ckl.seed}};
  }
  return {};
}

inline Strategy strategy_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "random_triplet") return Strategy::random();
  if (kind == "grid") return Strategy::grid_of(j.at("n").get<std::size_t>(), j.at("k").get<std::size_t>());
  if (kind == "ckl") {
    CklConfig c;
    c.mu = j.value("mu", c.mu);
    c.pool_size = j.value("pool_size", c.pool_size);
    c.posterior_samples = j.value("posterior_samples", c.posterior_samples);
    c.seed = j.value("seed", c.seed);
    return Strategy::ckl_with(c);
  }
  throw ArgumentError("config: unknown strategy kind '" + kind + "'");
}

inline json to_json(const TsteConfig& c) {
  json j{{"max_iters", c.max_iters}, {"learning_rate", c.learning_rate}, {"tolerance", c.tolerance},
         {"patience", c.patience},   {"init_stddev", c.init_stddev},     {"seed", c.seed}};
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  return j;
}

inline TsteConfig tste_from_json(const json& j, TsteConfig c = {}) {
  c.max_iters = j.value("max_iters", c.max_iters);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.patience = j.value("patience", c.patience);
  c.init_stddev = j.value("init_stddev", c.init_stddev);
  c.seed = j.value("seed", c.seed);
  if (j.contains("alpha")) c.alpha = j["alpha"].is_null() ? std::nullopt : std::optional<double>(j["alpha"].get<double>());
  return c;
}

inline json to_json(const econ::HitPricing& p) {
  return {{"hit_price", p.hit_price},
          {"usable_screens_per_hit", p.usable_screens_per_hit},
          {"catch_screens_per_hit", p.catch_screens_per_hit},
          {"per_triplet_price", p.per_triplet_price},
          {"platform_fee_fraction", p.platform_fee_fraction},
          {"catch_fraction", p.catch_fraction}};
}

inline econ::HitPricing pricing_from_json(const json& j, econ::HitPricing p = {}) {
  p.hit_price = j.value("hit_price", p.hit_price);
  p.usable_screens_per_hit = j.value("usable_screens_per_hit", p.usable_screens_per_hit);
  p.catch_screens_per_hit = j.value("catch_screens_per_hit", p.catch_screens_per_hit);
  p.per_triplet_price = j.value("per_triplet_price", p.per_triplet_price);
  p.platform_fee_fraction = j.value("platform_fee_fraction", p.platform_fee_fraction);
  p.catch_fraction = j.value("catch_fraction", p.catch_fraction);
  return p;
}

inline json to_json(const DatasetSpec& d) {
  switch (d.kind) {
    case DatasetKind::mixture:
      return {{"kind", "mixture"}, {"n_points", d.n_points}, {"n_clusters", d.n_clusters}, {"dim", d.dim}, {"spread", d.spread}};
    case DatasetKind::vectors: return {{"kind", "vectors"}, {"path", d.path}};
    case DatasetKind::triplets: return {{"kind", "triplets"}, {"path", d.path}, {"n_objects", d.n_objects}, {"dim", d.dim}};
  }
  return {};
}

inline DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec d;
  const auto kind = j.value("kind", std::string("mixture"));
  if (kind == "mixture") {
    d.kind = DatasetKind::mixture;
  } else if (kind == "vectors") {
    d.kind = DatasetKind::vectors;
  } else if (kind == "triplets") {
    d.kind = DatasetKind::triplets;
  } else {
    throw ArgumentError("config: unknown dataset kind '" + kind + "'");
  }
  d.n_points = j.value("n_points", d.n_points);
  d.n_clusters = j.value("n_clusters", d.n_clusters);
  d.dim = j.value("dim", d.dim);
  d.spread = j.value("spread", d.spread);
  d.path = j.value("path", d.path);
  d.n_objects = j.value("n_objects", d.n_objects);
  return d;
}

inline json to_json(const WorkerModel& w) {
  return {{"kind", w.kind == WorkerKind::perfect ? "perfect" : "noisy"}, {"temperature", w.temperature}, {"seed", w.seed}};
}

inline WorkerModel worker_from_json(const json& j) {
  WorkerModel w;
  const auto kind = j.value("kind", std::string("perfect"));
  if (kind == "perfect") {
    w.kind = WorkerKind::perfect;
  } else if (kind == "noisy") {
    w.kind = WorkerKind::noisy;
  } else {
    throw ArgumentError("config: unknown worker kind '" + kind + "'");
  }
  w.temperature = j.value("temperature", w.temperature);
  w.seed = j.value("seed", w.seed);
  return w;
}

inline json to_json(const ExperimentConfig& c) {
  json strategies = json::array();
  for (const auto& s : c.strategies) strategies.push_back(to_json(s));
  return {{"dataset", to_json(c.dataset)},
          {"strategies", strategies},
          {"budget_screens", c.budget_screens},
          {"checkpoints", c.checkpoints},
          {"embed_dim", c.embed_dim},
          {"tste", to_json(c.tste)},
          {"pricing", to_json(c.pricing)},
          {"seeds", c.seeds},
          {"heldout_triplets", c.heldout_triplets},
          {"ckl_refit_every", c.ckl_refit_every},
          {"worker", to_json(c.worker)},
          {"threads", c.threads}};
}

/// Missing keys keep their defaults.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) c.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j["strategies"]) c.strategies.push_back(strategy_from_json(s));
    }
    c.budget_screens = j.value("budget_screens", c.budget_screens);
    if (j.contains("checkpoints")) c.checkpoints = j["checkpoints"].get<std::vector<std::size_t>>();
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    if (j.contains("tste")) c.tste = tste_from_json(j["tste"]);
    if (j.contains("pricing")) c.pricing = pricing_from_json(j["pricing"]);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.heldout_triplets = j.value("heldout_triplets", c.heldout_triplets);
    c.ckl_refit_every = j.value("ckl_refit_every", c.ckl_refit_every);
    if (j.contains("worker")) c.worker = worker_from_json(j["worker"]);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  c.tste.dim = c.embed_dim;
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  return config_from_json(j);
}

}  // namespace tripgrid::harness
