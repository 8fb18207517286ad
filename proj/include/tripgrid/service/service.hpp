#pragma once

// In-process collection service. Each experiment serializes assignment and
// answer appends behind its own lock; reads share it. Durable state lives in
// <data_dir>/<experiment_id>/{manifest.json,answers.jsonl}; everything else is
// rebuilt by replaying the log.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tripgrid/collection/dedup.hpp"
#include "tripgrid/service/answer_log.hpp"
#include "tripgrid/service/experiment.hpp"
#include "tripgrid/service/offline.hpp"

namespace tripgrid::service {

namespace fs = std::filesystem;

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

struct NextTask {
  bool done = false;
  const ScheduledTask* task = nullptr;
  // Answers this worker has given so far.
  std::size_t screens_answered = 0;
};

struct SubmitResult {
  bool accepted = false;
  // Identical resubmission of an already stored answer; acknowledged, not stored again.
  bool duplicate = false;
  // Machine-readable rejection code, empty when accepted.
  std::string code;
  std::string message;
  std::optional<bool> catch_passed;
};

class ExperimentState {
 public:
  explicit ExperimentState(CollectionExperiment exp, std::unique_ptr<AnswerLog> log = nullptr)
      : exp_(std::move(exp)),
        tasks_(generate_task_sequence(exp_)),
        answers_(tasks_.size()),
        block_owner_(exp_.block_count()),
        log_(std::move(log)) {}

  const CollectionExperiment& experiment() const noexcept { return exp_; }
  const std::vector<ScheduledTask>& tasks() const noexcept { return tasks_; }

  /// Rebuilds in-memory state from records already on disk (no re-append).
  void replay(std::span<const AnswerRecord> records) {
    std::unique_lock lock(mu_);
    for (const auto& r : records) {
      if (r.task_id >= tasks_.size()) throw ConstraintError("log refers to unknown task " + std::to_string(r.task_id));
      if (answers_[r.task_id]) throw ConstraintError("log answers task " + std::to_string(r.task_id) + " twice");
      auto& owner = block_owner_[tasks_[r.task_id].block];
      if (owner.empty()) claim(r.worker_id, tasks_[r.task_id].block);
      if (owner != r.worker_id) throw ConstraintError("log answer from a worker not holding the block");
      apply(r);
    }
  }

  NextTask next_task(const std::string& worker) {
    std::unique_lock lock(mu_);
    NextTask out;
    out.screens_answered = answered_by(worker);
    if (auto* t = first_open_task(worker)) {
      out.task = t;
      return out;
    }
    // TODO: expire blocks whose holder stopped answering so another worker can take them.
    for (std::size_t b = 0; b < block_owner_.size(); ++b) {
      if (block_owner_[b].empty()) {
        claim(worker, b);
        out.task = first_open_task(worker);
        return out;
      }
    }
    out.done = true;
    return out;
  }

  SubmitResult submit(const std::string& worker, TaskId task_id, const std::vector<std::int64_t>& selected,
                      std::int64_t elapsed_ms, const Clock& clock) {
    std::unique_lock lock(mu_);
    auto reject = [](std::string code, std::string message) {
      SubmitResult r;
      r.code = std::move(code);
      r.message = std::move(message);
      return r;
    };
    if (task_id >= tasks_.size()) return reject("unknown_task", "no task " + std::to_string(task_id));
    const auto& st = tasks_[task_id];
    if (const auto& prev = answers_[task_id]) {
      if (prev->worker_id == worker && same_selection(prev->selected, selected)) {
        SubmitResult r;
        r.accepted = true;
        r.duplicate = true;
        r.catch_passed = prev->catch_passed;
        return r;
      }
      return reject("already_answered", "task " + std::to_string(task_id) + " already has an answer");
    }
    if (block_owner_[st.block] != worker) {
      return reject("not_assigned", "task " + std::to_string(task_id) + " is not assigned to this worker");
    }
    if (elapsed_ms < 0) return reject("invalid_elapsed", "elapsed_ms must be >= 0");
    if (selected.size() != exp_.spec.k) {
      return reject("wrong_selection_count", "expected " + std::to_string(exp_.spec.k) + " selections, got " +
                                                 std::to_string(selected.size()));
    }
    std::set<std::int64_t> seen;
    for (auto p : selected) {
      if (p < 0 || static_cast<std::size_t>(p) >= exp_.spec.n || !seen.insert(p).second) {
        return reject("invalid_position", "selection " + std::to_string(p) + " is out of range or repeated");
      }
    }

    AnswerRecord rec;
    rec.task_id = task_id;
    rec.worker_id = worker;
    rec.selected.assign(selected.begin(), selected.end());
    rec.elapsed_ms = static_cast<std::uint64_t>(elapsed_ms);
    rec.received_at = clock();
    rec.is_catch = st.is_catch;
    if (st.is_catch) rec.catch_passed = seen.contains(static_cast<std::int64_t>(st.catch_position));
    if (log_) log_->append(rec);
    apply(rec);

    SubmitResult r;
    r.accepted = true;
    r.catch_passed = rec.catch_passed;
    return r;
  }

  /// Answers in the order they were accepted.
  std::vector<AnswerRecord> answers() const {
    std::shared_lock lock(mu_);
    return log_order_;
  }

  TripletExport export_triplets(std::optional<double> min_catch_pass_rate = std::nullopt) const {
    std::shared_lock lock(mu_);
    if (min_catch_pass_rate) return offline_export(exp_, log_order_, min_catch_pass_rate);
    return {csv::triplets_to_string(store_.triplets()), store_.raw_count(), store_.unique_count()};
  }

  std::vector<WorkerStats> worker_stats() const {
    std::shared_lock lock(mu_);
    return compute_worker_stats(log_order_, exp_.pricing);
  }

  std::size_t answered_count() const {
    std::shared_lock lock(mu_);
    return log_order_.size();
  }

 private:
  static bool same_selection(const std::vector<std::size_t>& a, const std::vector<std::int64_t>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (b[i] < 0 || a[i] != static_cast<std::size_t>(b[i])) return false;
    return true;
  }

  void claim(const std::string& worker, std::size_t block) {
    block_owner_[block] = worker;
    blocks_of_[worker].insert(block);
  }

  const ScheduledTask* first_open_task(const std::string& worker) const {
    auto it = blocks_of_.find(worker);
    if (it == blocks_of_.end()) return nullptr;
    const std::size_t per_block = exp_.hit.block_size();
    for (std::size_t b : it->second) {
      for (std::size_t id = b * per_block; id < tasks_.size() && tasks_[id].block == b; ++id)
        if (!answers_[id]) return &tasks_[id];
    }
    return nullptr;
  }

  std::size_t answered_by(const std::string& worker) const {
    auto it = per_worker_.find(worker);
    return it == per_worker_.end() ? 0 : it->second;
  }

  void apply(const AnswerRecord& r) {
    const auto& st = tasks_[r.task_id];
    if (!st.is_catch) store_.add(expand_grid_answer(st.task, to_grid_answer(r)));
    answers_[r.task_id] = r;
    log_order_.push_back(r);
    ++per_worker_[r.worker_id];
  }

  CollectionExperiment exp_;
  std::vector<ScheduledTask> tasks_;
  std::vector<std::optional<AnswerRecord>> answers_;
  std::vector<std::string> block_owner_;
  std::map<std::string, std::set<std::size_t>> blocks_of_;
  std::map<std::string, std::size_t> per_worker_;
  std::vector<AnswerRecord> log_order_;
  TripletStore store_;
  std::unique_ptr<AnswerLog> log_;
  mutable std::shared_mutex mu_;
};

/// Registry of experiments. An empty data_dir keeps everything in memory.
class CollectionService {
 public:
  explicit CollectionService(std::string data_dir = {}, Clock clock = system_clock_ms)
      : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
    if (data_dir_.empty()) return;
    fs::create_directories(data_dir_);
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(data_dir_))
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) load(d);
  }

  const std::string& data_dir() const noexcept { return data_dir_; }

  /// Returns the experiment id (generated when the manifest has none).
  std::string create_experiment(CollectionExperiment exp) {
    std::unique_lock lock(mu_);
    if (exp.experiment_id.empty()) {
      for (std::size_t i = experiments_.size() + 1;; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "exp-%04zu", i);
        if (!experiments_.contains(buf)) {
          exp.experiment_id = buf;
          break;
        }
      }
    }
    exp.validate();
    if (experiments_.contains(exp.experiment_id)) {
      throw ArgumentError("experiment '" + exp.experiment_id + "' already exists");
    }
    std::unique_ptr<AnswerLog> log;
    if (!data_dir_.empty()) {
      const auto dir = fs::path(data_dir_) / exp.experiment_id;
      fs::create_directories(dir);
      const auto tmp = dir / "manifest.json.tmp";
      {
        std::ofstream out(tmp);
        out << to_json(exp).dump(2) << '\n';
        if (!out) throw IoError("cannot write manifest in " + dir.string());
      }
      fs::rename(tmp, dir / "manifest.json");
      log = std::make_unique<AnswerLog>((dir / "answers.jsonl").string());
    }
    const auto id = exp.experiment_id;
    experiments_.emplace(id, std::make_unique<ExperimentState>(std::move(exp), std::move(log)));
    return id;
  }

  bool contains(const std::string& id) const {
    std::shared_lock lock(mu_);
    return experiments_.contains(id);
  }

  std::vector<std::string> experiment_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : experiments_) ids.push_back(id);
    return ids;
  }

  ExperimentState& experiment(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = experiments_.find(id);
    if (it == experiments_.end()) throw NotFoundError("unknown experiment '" + id + "'");
    return *it->second;
  }

  NextTask next_task(const std::string& id, const std::string& worker) {
    if (worker.empty()) throw ArgumentError("worker id is required");
    return experiment(id).next_task(worker);
  }

  SubmitResult submit_answer(const std::string& id, const std::string& worker, TaskId task_id,
                             const std::vector<std::int64_t>& selected, std::int64_t elapsed_ms) {
    if (worker.empty()) throw ArgumentError("worker id is required");
    return experiment(id).submit(worker, task_id, selected, elapsed_ms, clock_);
  }

  TripletExport export_triplets(const std::string& id, std::optional<double> min_catch_pass_rate = std::nullopt) const {
    return experiment(id).export_triplets(min_catch_pass_rate);
  }

  std::vector<WorkerStats> worker_stats(const std::string& id) const { return experiment(id).worker_stats(); }

  std::string manifest_path(const std::string& id) const {
    return (fs::path(data_dir_) / id / "manifest.json").string();
  }
  std::string log_path(const std::string& id) const { return (fs::path(data_dir_) / id / "answers.jsonl").string(); }

 private:
  void load(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError((dir / "manifest.json").string() + ": " + e.what(), 0);
    }
    auto exp = experiment_from_json(j);
    const auto records = read_answer_log((dir / "answers.jsonl").string());
    auto state = std::make_unique<ExperimentState>(exp, std::make_unique<AnswerLog>((dir / "answers.jsonl").string()));
    state->replay(records);
    experiments_.emplace(exp.experiment_id, std::move(state));
  }

  std::string data_dir_;
  Clock clock_;
  std::map<std::string, std::unique_ptr<ExperimentState>> experiments_;
  mutable std::shared_mutex mu_;
};

}  // namespace tripgrid::service
