#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tripgrid/collection/grid.hpp"
#include "tripgrid/collection/sampling.hpp"
#include "tripgrid/oracle/ground_truth.hpp"

namespace tripgrid {

enum class WorkerKind { perfect, noisy };

struct WorkerModel {
  WorkerKind kind = WorkerKind::perfect;
  // Noisy workers only; 0 behaves like a perfect worker.
  double temperature = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ArgumentError("worker temperature must be >= 0");
  }

  bool deterministic() const { return kind == WorkerKind::perfect || temperature == 0.0; }
};

/// Synthetic annotator. Noisy workers own their random stream; do not share one across threads.
class Worker {
 public:
  explicit Worker(WorkerModel model = {}) : model_(model), rng_(model.seed) { model_.validate(); }

  const WorkerModel& model() const noexcept { return model_; }
  Rng& rng() noexcept { return rng_; }

 private:
  WorkerModel model_;
  Rng rng_;
};

namespace detail {

inline void check_object(const GroundTruth& gt, ObjectId id) {
  if (id >= gt.size()) {
    throw ConstraintError("object " + std::to_string(id) + " outside ground truth of size " + std::to_string(gt.size()));
  }
}

}  // namespace detail

/// Perfect workers pick the k grid items nearest the probe (lower object id on ties).
/// Noisy workers draw k items without replacement, weight exp(-distance / temperature).
inline GridAnswer oracle_answer_grid(const GroundTruth& gt, const GridTask& task, Worker& worker) {
  validate_task(task);
  detail::check_object(gt, task.probe);
  for (ObjectId id : task.grid) detail::check_object(gt, id);

  const std::size_t n = task.grid.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = gt.vectors.distance(task.probe, task.grid[i]);

  GridAnswer answer{task.task_id, {}, 0};
  if (worker.model().deterministic()) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return task.grid[a] < task.grid[b];
    });
    answer.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(task.spec.k));
  } else {
    const double temp = worker.model().temperature;
    std::vector<std::size_t> remaining(n);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t pick = 0; pick < task.spec.k; ++pick) {
      double dmin = dist[remaining.front()];
      for (std::size_t r : remaining) dmin = std::min(dmin, dist[r]);
      std::vector<double> w(remaining.size());
      double total = 0.0;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        w[i] = std::exp(-(dist[remaining[i]] - dmin) / temp);
        total += w[i];
      }
      double u = unit(worker.rng()) * total;
      std::size_t chosen = remaining.size() - 1;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (u < w[i]) {
          chosen = i;
          break;
        }
        u -= w[i];
      }
      // Zero-weight items are never chosen even if rounding runs off the end.
      while (w[chosen] == 0.0 && chosen > 0) --chosen;
      answer.selected.push_back(remaining[chosen]);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
  }
  std::sort(answer.selected.begin(), answer.selected.end());
  return answer;
}

/// Orients the question. Perfect: nearer object first, lower id on ties.
/// Noisy: (probe, b, c) with probability logistic((d(probe,c) - d(probe,b)) / temperature).
inline Triplet oracle_answer_triplet(const GroundTruth& gt, ObjectId probe, ObjectId b, ObjectId c, Worker& worker) {
  detail::check_object(gt, probe);
  detail::check_object(gt, b);
  detail::check_object(gt, c);
  if (probe == b || probe == c || b == c) throw ConstraintError("triplet question needs three distinct objects");

  const double db = gt.vectors.distance(probe, b);
  const double dc = gt.vectors.distance(probe, c);
  bool b_near;
  if (worker.model().deterministic()) {
    b_near = db < dc || (db == dc && b < c);
  } else {
    const double gap = (dc - db) / worker.model().temperature;
    const double p_b = 1.0 / (1.0 + std::exp(-gap));
    b_near = std::uniform_real_distribution<double>(0.0, 1.0)(worker.rng()) < p_b;
  }
  return b_near ? Triplet{probe, b, c} : Triplet{probe, c, b};
}

inline Triplet oracle_answer_triplet(const GroundTruth& gt, const TripletQuestion& q, Worker& worker) {
  return oracle_answer_triplet(gt, q.probe, q.b, q.c, worker);
}

}  // namespace tripgrid
