#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tripgrid/collection/dedup.hpp"
#include "tripgrid/collection/grid.hpp"
#include "tripgrid/core/csv_io.hpp"
#include "tripgrid/econ/econ.hpp"
#include "tripgrid/service/answer_log.hpp"
#include "tripgrid/service/experiment.hpp"

namespace tripgrid::service {

struct WorkerStats {
  std::string worker_id;
  std::size_t screens_answered = 0;
  std::size_t catch_trials = 0;
  double median_seconds = 0.0;
  // 1.0 for a worker who has not met a catch trial yet.
  double catch_pass_rate = 1.0;
  // Absent when the median time is zero.
  std::optional<double> implied_wage;
};

inline json to_json(const WorkerStats& s) {
  return {{"worker_id", s.worker_id},
          {"screens_answered", s.screens_answered},
          {"catch_trials", s.catch_trials},
          {"median_seconds", s.median_seconds},
          {"catch_pass_rate", s.catch_pass_rate},
          {"implied_wage", s.implied_wage ? json(*s.implied_wage) : json(nullptr)}};
}

/// Sorted by worker id.
inline std::vector<WorkerStats> compute_worker_stats(std::span<const AnswerRecord> answers,
                                                     const econ::HitPricing& pricing) {
  std::map<std::string, std::vector<const AnswerRecord*>> by_worker;
  for (const auto& r : answers) by_worker[r.worker_id].push_back(&r);
  std::vector<WorkerStats> out;
  for (const auto& [worker, recs] : by_worker) {
    WorkerStats s;
    s.worker_id = worker;
    s.screens_answered = recs.size();
    std::vector<double> secs;
    std::size_t passed = 0;
    for (const auto* r : recs) {
      secs.push_back(static_cast<double>(r->elapsed_ms) / 1000.0);
      if (r->is_catch) {
        ++s.catch_trials;
        if (r->catch_passed.value_or(false)) ++passed;
      }
    }
    std::sort(secs.begin(), secs.end());
    const std::size_t m = secs.size() / 2;
    s.median_seconds = secs.size() % 2 ? secs[m] : 0.5 * (secs[m - 1] + secs[m]);
    if (s.catch_trials > 0) s.catch_pass_rate = static_cast<double>(passed) / static_cast<double>(s.catch_trials);
    if (s.median_seconds > 0.0) s.implied_wage = econ::hourly_wage(s.median_seconds, pricing);
    out.push_back(std::move(s));
  }
  return out;
}

struct TripletExport {
  std::string csv;
  std::size_t raw = 0;
  std::size_t unique = 0;
};

/// Library-level pipeline over a log: expand every non-catch answer in log order,
/// deduplicate, write the shared triplet CSV. With a threshold, answers from workers
/// whose catch pass rate is below it are dropped first.
inline TripletExport offline_export(const CollectionExperiment& exp, std::span<const AnswerRecord> answers,
                                    std::optional<double> min_catch_pass_rate = std::nullopt) {
  const auto tasks = generate_task_sequence(exp);
  std::set<std::string> excluded;
  if (min_catch_pass_rate) {
    for (const auto& s : compute_worker_stats(answers, exp.pricing))
      if (s.catch_pass_rate < *min_catch_pass_rate) excluded.insert(s.worker_id);
  }
  std::vector<Triplet> raw;
  for (const auto& r : answers) {
    if (r.task_id >= tasks.size()) throw ConstraintError("log refers to unknown task " + std::to_string(r.task_id));
    const auto& st = tasks[r.task_id];
    if (st.is_catch || excluded.contains(r.worker_id)) continue;
    const auto ts = expand_grid_answer(st.task, to_grid_answer(r));
    raw.insert(raw.end(), ts.begin(), ts.end());
  }
  const auto unique = values(dedup_triplets(raw));
  return {csv::triplets_to_string(unique), raw.size(), unique.size()};
}

inline TripletExport offline_export_files(const std::string& manifest_path, const std::string& log_path,
                                          std::optional<double> min_catch_pass_rate = std::nullopt) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  const auto answers = read_answer_log(log_path);
  return offline_export(experiment_from_json(j), answers, min_catch_pass_rate);
}

}  // namespace tripgrid::service
