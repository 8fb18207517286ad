#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

/// (probe, unordered pair) -- the identity of a question regardless of the answer.
struct TripletKey {
  ObjectId probe = 0;
  ObjectId lo = 0;
  ObjectId hi = 0;

  static TripletKey of(const Triplet& t) {
    return {t.probe, std::min(t.near, t.far), std::max(t.near, t.far)};
  }

  friend bool operator==(const TripletKey&, const TripletKey&) = default;
  friend auto operator<=>(const TripletKey&, const TripletKey&) = default;
};

/// Number of distinct TripletKeys over n objects: n (n-1) (n-2) / 2.
inline std::size_t unique_triplet_capacity(std::size_t n_objects) {
  if (n_objects < 3) throw ArgumentError("unique_triplet_capacity needs at least 3 objects");
  return n_objects * (n_objects - 1) * (n_objects - 2) / 2;
}

/// Incremental deduplicator. Conflicting answers for one key resolve to the
/// majority orientation; exact ties go to the orientation seen last.
class TripletStore {
 public:
  void add(const Triplet& t) {
    const auto key = TripletKey::of(t);
    auto [it, inserted] = entries_.try_emplace(key);
    Entry& e = it->second;
    if (inserted) e.arrival = arrival_counter_++;
    const bool lo_near = t.near == key.lo;
    (lo_near ? e.lo_near : e.hi_near) += 1;
    e.last_lo_near = lo_near;
    ++raw_count_;
  }

  void add(std::span<const Triplet> ts) {
    for (const auto& t : ts) add(t);
  }

  std::size_t unique_count() const noexcept { return entries_.size(); }
  std::size_t raw_count() const noexcept { return raw_count_; }
  bool contains(const TripletKey& key) const { return entries_.contains(key); }

  Triplet resolved(const TripletKey& key) const { return resolve(key, entries_.at(key)); }

  /// Resolved triplets ordered by key.
  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(entries_.size());
    for (const auto& [key, e] : entries_) out.push_back(resolve(key, e));
    return out;
  }

  /// Resolved triplets ordered by when their key was first seen.
  std::vector<Triplet> triplets_in_arrival_order() const {
    std::vector<std::pair<std::size_t, Triplet>> tagged;
    tagged.reserve(entries_.size());
    for (const auto& [key, e] : entries_) tagged.emplace_back(e.arrival, resolve(key, e));
    std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Triplet> out;
    out.reserve(tagged.size());
    for (const auto& [_, t] : tagged) out.push_back(t);
    return out;
  }

  std::map<TripletKey, Triplet> as_map() const {
    std::map<TripletKey, Triplet> out;
    for (const auto& [key, e] : entries_) out.emplace_hint(out.end(), key, resolve(key, e));
    return out;
  }

 private:
  struct Entry {
    std::size_t lo_near = 0;
    std::size_t hi_near = 0;
    bool last_lo_near = true;
    std::size_t arrival = 0;
  };

  static Triplet resolve(const TripletKey& key, const Entry& e) {
    bool lo_near = e.last_lo_near;
    if (e.lo_near != e.hi_near) lo_near = e.lo_near > e.hi_near;
    return lo_near ? Triplet{key.probe, key.lo, key.hi} : Triplet{key.probe, key.hi, key.lo};
  }

  std::map<TripletKey, Entry> entries_;
  std::size_t arrival_counter_ = 0;
  std::size_t raw_count_ = 0;
};

inline std::map<TripletKey, Triplet> dedup_triplets(std::span<const Triplet> triplets) {
  TripletStore store;
  store.add(triplets);
  return store.as_map();
}

inline std::vector<Triplet> values(const std::map<TripletKey, Triplet>& deduped) {
  std::vector<Triplet> out;
  out.reserve(deduped.size());
  for (const auto& [_, t] : deduped) out.push_back(t);
  return out;
}

}  // namespace tripgrid
