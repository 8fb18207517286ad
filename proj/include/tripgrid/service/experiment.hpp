#pragma once

// Collection experiment definition and its deterministic task sequence.
//
// Screens are served in HIT blocks of `usable + catch` slots. A catch trial is a
// grid task whose grid holds the probe itself at one uniformly random position;
// it passes when that position is among the selections. Catch trials are never
// expanded into triplets.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripgrid/collection/grid.hpp"
#include "tripgrid/collection/sampling.hpp"
#include "tripgrid/econ/econ.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid::service {

using nlohmann::json;

struct HitStructure {
  std::size_t usable = 8;
  std::size_t catch_trials = 2;

  std::size_t block_size() const { return usable + catch_trials; }

  void validate() const {
    if (usable < 1) throw ArgumentError("hit structure needs at least one usable screen");
  }

  friend bool operator==(const HitStructure&, const HitStructure&) = default;
};

struct CollectionExperiment {
  std::string experiment_id;
  // Asset path per object; the index is the object id.
  std::vector<std::string> catalog;
  GridSpec spec;
  // Usable (non-catch) screens to collect.
  std::size_t target_screens = 0;
  econ::HitPricing pricing;
  HitStructure hit;
  std::uint64_t seed = 0;
  std::string instruction = "Select the images most similar to the one on the left";

  void validate() const {
    spec.validate();
    hit.validate();
    pricing.validate();
    if (catalog.size() < spec.n + 1) {
      throw ArgumentError("catalog of " + std::to_string(catalog.size()) + " objects is too small for a grid of " +
                          std::to_string(spec.n) + " plus the probe");
    }
    if (!experiment_id.empty() && experiment_id.find_first_of("/\\. ") != std::string::npos) {
      throw ArgumentError("experiment id may not contain '/', '\\', '.' or spaces");
    }
  }

  std::size_t block_count() const { return (target_screens + hit.usable - 1) / hit.usable; }
};

struct ScheduledTask {
  GridTask task;
  bool is_catch = false;
  // Grid position of the probe duplicate; catch trials only.
  std::size_t catch_position = 0;
  std::size_t block = 0;
};

/// Full task sequence, block by block. Task ids are positions in the sequence.
/// Each block holds min(usable, remaining) usable screens plus all catch trials,
/// with the catch slots chosen uniformly at random inside the block.
inline std::vector<ScheduledTask> generate_task_sequence(const CollectionExperiment& exp) {
  exp.validate();
  Rng rng(exp.seed);
  const std::size_t n_objects = exp.catalog.size();
  std::vector<ScheduledTask> out;
  std::size_t remaining = exp.target_screens;
  for (std::size_t b = 0; remaining > 0; ++b) {
    const std::size_t usable = std::min(exp.hit.usable, remaining);
    remaining -= usable;
    const std::size_t slots = usable + exp.hit.catch_trials;
    std::vector<std::size_t> order(slots);
    for (std::size_t i = 0; i < slots; ++i) order[i] = i;
    for (std::size_t i = 0; i < exp.hit.catch_trials; ++i) std::swap(order[i], order[i + uniform_index(rng, slots - i)]);
    std::vector<bool> is_catch(slots, false);
    for (std::size_t i = 0; i < exp.hit.catch_trials; ++i) is_catch[order[i]] = true;

    for (std::size_t s = 0; s < slots; ++s) {
      ScheduledTask st;
      st.block = b;
      st.task = sample_random_grid(n_objects, exp.spec, rng, out.size());
      if (is_catch[s]) {
        st.is_catch = true;
        st.catch_position = uniform_index(rng, exp.spec.n);
        st.task.grid[st.catch_position] = st.task.probe;
      }
      out.push_back(std::move(st));
    }
  }
  return out;
}

// ---- answer log records ------------------------------------------------------------

struct AnswerRecord {
  TaskId task_id = 0;
  std::string worker_id;
  std::vector<std::size_t> selected;
  std::uint64_t elapsed_ms = 0;
  // Milliseconds since the Unix epoch, server clock.
  std::int64_t received_at = 0;
  bool is_catch = false;
  std::optional<bool> catch_passed;

  friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;
};

inline json to_json(const AnswerRecord& r) {
  json j{{"task_id", r.task_id},   {"worker_id", r.worker_id},     {"selected", r.selected},
         {"elapsed_ms", r.elapsed_ms}, {"received_at", r.received_at}, {"is_catch", r.is_catch}};
  if (r.catch_passed) j["catch_passed"] = *r.catch_passed;
  return j;
}

inline AnswerRecord answer_from_json(const json& j) {
  AnswerRecord r;
  r.task_id = j.at("task_id").get<TaskId>();
  r.worker_id = j.at("worker_id").get<std::string>();
  r.selected = j.at("selected").get<std::vector<std::size_t>>();
  r.elapsed_ms = j.at("elapsed_ms").get<std::uint64_t>();
  r.received_at = j.at("received_at").get<std::int64_t>();
  r.is_catch = j.at("is_catch").get<bool>();
  if (j.contains("catch_passed")) r.catch_passed = j["catch_passed"].get<bool>();
  return r;
}

inline GridAnswer to_grid_answer(const AnswerRecord& r) { return {r.task_id, r.selected, r.elapsed_ms}; }

// ---- manifest ---------------------------------------------------------------------

inline json to_json(const CollectionExperiment& e) {
  return {{"experiment_id", e.experiment_id},
          {"catalog", e.catalog},
          {"spec", {{"n", e.spec.n}, {"k", e.spec.k}}},
          {"target_screens", e.target_screens},
          {"pricing",
           {{"hit_price", e.pricing.hit_price},
            {"usable_screens_per_hit", e.pricing.usable_screens_per_hit},
            {"catch_screens_per_hit", e.pricing.catch_screens_per_hit},
            {"per_triplet_price", e.pricing.per_triplet_price},
            {"platform_fee_fraction", e.pricing.platform_fee_fraction},
            {"catch_fraction", e.pricing.catch_fraction}}},
          {"hit", {{"usable", e.hit.usable}, {"catch", e.hit.catch_trials}}},
          {"seed", e.seed},
          {"instruction", e.instruction}};
}

/// Missing optional keys keep their defaults; catalog, spec and target_screens are required.
inline CollectionExperiment experiment_from_json(const json& j) {
  CollectionExperiment e;
  try {
    e.experiment_id = j.value("experiment_id", std::string());
    e.catalog = j.at("catalog").get<std::vector<std::string>>();
    e.spec = GridSpec{j.at("spec").at("n").get<std::size_t>(), j.at("spec").at("k").get<std::size_t>()};
    e.target_screens = j.at("target_screens").get<std::size_t>();
    if (j.contains("pricing")) {
      const auto& p = j["pricing"];
      e.pricing.hit_price = p.value("hit_price", e.pricing.hit_price);
      e.pricing.usable_screens_per_hit = p.value("usable_screens_per_hit", e.pricing.usable_screens_per_hit);
      e.pricing.catch_screens_per_hit = p.value("catch_screens_per_hit", e.pricing.catch_screens_per_hit);
      e.pricing.per_triplet_price = p.value("per_triplet_price", e.pricing.per_triplet_price);
      e.pricing.platform_fee_fraction = p.value("platform_fee_fraction", e.pricing.platform_fee_fraction);
      e.pricing.catch_fraction = p.value("catch_fraction", e.pricing.catch_fraction);
    }
    if (j.contains("hit")) {
      e.hit.usable = j["hit"].value("usable", e.hit.usable);
      e.hit.catch_trials = j["hit"].value("catch", e.hit.catch_trials);
    }
    e.seed = j.value("seed", e.seed);
    e.instruction = j.value("instruction", e.instruction);
  } catch (const json::exception& ex) {
    throw ArgumentError(std::string("experiment manifest: ") + ex.what());
  }
  return e;
}

}  // namespace tripgrid::service
