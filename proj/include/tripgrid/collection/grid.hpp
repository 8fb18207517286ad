#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

/// n-choose-k grid: n grid items (probe excluded), k of them to be selected.
struct GridSpec {
  std::size_t n = 16;
  std::size_t k = 4;

  void validate() const {
    if (k < 1 || k >= n) {
      throw ArgumentError("grid spec needs 1 <= k < n (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
  }

  std::size_t triplets_per_answer() const { return k * (n - k); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

using TaskId = std::uint64_t;

struct GridTask {
  TaskId task_id = 0;
  ObjectId probe = 0;
  std::vector<ObjectId> grid;
  GridSpec spec;

  friend bool operator==(const GridTask&, const GridTask&) = default;
};

struct GridAnswer {
  TaskId task_id = 0;
  // Positions into GridTask::grid.
  std::vector<std::size_t> selected;
  std::uint64_t elapsed_ms = 0;

  friend bool operator==(const GridAnswer&, const GridAnswer&) = default;
};

inline void validate_task(const GridTask& task) {
  task.spec.validate();
  if (task.grid.size() != task.spec.n) {
    throw ConstraintError("task " + std::to_string(task.task_id) + ": grid has " + std::to_string(task.grid.size()) +
                          " items, spec n=" + std::to_string(task.spec.n));
  }
  auto sorted = task.grid;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConstraintError("task " + std::to_string(task.task_id) + ": grid entries are not distinct");
  }
}

/// Checks count, range and distinctness of the selected positions.
inline void validate_selection(const GridSpec& spec, const std::vector<std::size_t>& selected) {
  if (selected.size() != spec.k) {
    throw ConstraintError("selection has " + std::to_string(selected.size()) + " items, expected k=" +
                          std::to_string(spec.k));
  }
  std::vector<bool> seen(spec.n, false);
  for (std::size_t pos : selected) {
    if (pos >= spec.n) throw ConstraintError("selected position " + std::to_string(pos) + " out of range");
    if (seen[pos]) throw ConstraintError("selected position " + std::to_string(pos) + " repeated");
    seen[pos] = true;
  }
}

/// Every (selected, unselected) pair becomes (probe, selected, unselected):
/// k * (n - k) triplets, selected objects ascending, then unselected ascending.
inline std::vector<Triplet> expand_grid_answer(const GridTask& task, const GridAnswer& answer) {
  if (answer.task_id != task.task_id) {
    throw ConstraintError("answer for task " + std::to_string(answer.task_id) + " given to task " +
                          std::to_string(task.task_id));
  }
  validate_task(task);
  validate_selection(task.spec, answer.selected);
  if (std::find(task.grid.begin(), task.grid.end(), task.probe) != task.grid.end()) {
    throw ConstraintError("task " + std::to_string(task.task_id) + ": probe appears in its own grid");
  }

  std::vector<bool> is_selected(task.spec.n, false);
  for (std::size_t pos : answer.selected) is_selected[pos] = true;
  std::vector<ObjectId> near;
  std::vector<ObjectId> far;
  near.reserve(task.spec.k);
  far.reserve(task.spec.n - task.spec.k);
  for (std::size_t i = 0; i < task.spec.n; ++i) (is_selected[i] ? near : far).push_back(task.grid[i]);
  std::sort(near.begin(), near.end());
  std::sort(far.begin(), far.end());

  std::vector<Triplet> out;
  out.reserve(near.size() * far.size());
  for (ObjectId s : near)
    for (ObjectId f : far) out.push_back({task.probe, s, f});
  return out;
}

}  // namespace tripgrid
