#pragma once

// Cost and wage arithmetic for grid and single-triplet collection.
//
// Two cost conventions are kept separate:
//   screens_cost        researcher cost per usable screen, catch overhead included, no platform fee
//   one_at_a_time_cost  per-triplet price grossed up for catch trials and the platform fee

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "tripgrid/core/csv_io.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid::econ {

struct HitPricing {
  double hit_price = 0.10;
  std::size_t usable_screens_per_hit = 8;
  std::size_t catch_screens_per_hit = 2;
  double per_triplet_price = 0.01;
  double platform_fee_fraction = 0.10;
  double catch_fraction = 0.20;

  void validate() const {
    if (!(hit_price >= 0.0) || !(per_triplet_price >= 0.0)) throw ArgumentError("pricing: prices must be >= 0");
    if (!(platform_fee_fraction >= 0.0 && platform_fee_fraction < 1.0)) {
      throw ArgumentError("pricing: platform_fee_fraction must be in [0, 1)");
    }
    if (!(catch_fraction >= 0.0 && catch_fraction < 1.0)) throw ArgumentError("pricing: catch_fraction must be in [0, 1)");
    if (usable_screens_per_hit + catch_screens_per_hit < 1) throw ArgumentError("pricing: a HIT needs at least one screen");
    if (usable_screens_per_hit < 1) throw ArgumentError("pricing: a HIT needs at least one usable screen");
  }

  std::size_t screens_per_hit() const { return usable_screens_per_hit + catch_screens_per_hit; }
};

/// Median seconds per screen keyed by (n, k).
using TimingTable = std::map<std::pair<std::size_t, std::size_t>, double>;

/// Median seconds per screen for the eleven measured grid sizes.
inline TimingTable default_timing_table() {
  return {
      {{4, 1}, 3.57},  {{4, 2}, 3.45},  {{8, 1}, 3.04},  {{8, 2}, 5.79},  {{8, 4}, 7.65},  {{12, 1}, 4.17},
      {{12, 2}, 6.78}, {{12, 4}, 8.67}, {{16, 1}, 6.72}, {{16, 2}, 8.84}, {{16, 4}, 9.59},
  };
}

/// Wages printed alongside default_timing_table(), for comparison.
inline std::map<std::pair<std::size_t, std::size_t>, double> reference_wage_table() {
  return {
      {{4, 1}, 10.09}, {{4, 2}, 10.45}, {{8, 1}, 11.85}, {{8, 2}, 6.22},  {{8, 4}, 4.71},  {{12, 1}, 8.64},
      {{12, 2}, 5.31}, {{12, 4}, 4.15}, {{16, 1}, 5.36}, {{16, 2}, 4.07}, {{16, 4}, 3.76},
  };
}

inline void validate_timing(const TimingTable& timing) {
  for (const auto& [nk, seconds] : timing) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) {
      throw ArgumentError("timing entry (" + std::to_string(nk.first) + "," + std::to_string(nk.second) +
                          ") must be > 0");
    }
  }
}

/// CSV with header `n,k,seconds`; a repeated (n, k) is an error.
inline TimingTable read_timing_table(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || csv::trim(line) != "n,k,seconds") {
    throw ParseError("expected header 'n,k,seconds'", reader.line_no());
  }
  TimingTable t;
  while (reader.next(line)) {
    const auto n = reader.line_no();
    const auto f = csv::split(line);
    if (f.size() != 3) throw ParseError("expected 3 fields", n);
    const auto key = std::make_pair(csv::parse_number<std::size_t>(f[0], n, "n"), csv::parse_number<std::size_t>(f[1], n, "k"));
    if (!t.emplace(key, csv::parse_number<double>(f[2], n, "seconds")).second) throw ParseError("duplicate (n,k)", n);
  }
  validate_timing(t);
  return t;
}

inline double screens_cost(std::size_t screens, const HitPricing& pricing = {}) {
  pricing.validate();
  return static_cast<double>(screens) * pricing.hit_price / static_cast<double>(pricing.usable_screens_per_hit);
}

inline double one_at_a_time_cost(std::size_t n_triplets, const HitPricing& pricing = {}) {
  pricing.validate();
  return static_cast<double>(n_triplets) * pricing.per_triplet_price / (1.0 - pricing.catch_fraction) /
         (1.0 - pricing.platform_fee_fraction);
}

/// Workers are paid for every screen in a HIT, catch trials included.
inline double hourly_wage(double seconds_per_screen, const HitPricing& pricing = {}) {
  pricing.validate();
  if (!(seconds_per_screen > 0.0) || !std::isfinite(seconds_per_screen)) {
    throw ArgumentError("hourly_wage: seconds_per_screen must be > 0");
  }
  const double per_screen = pricing.hit_price / static_cast<double>(pricing.screens_per_hit());
  return per_screen * 3600.0 / seconds_per_screen;
}

inline std::size_t triplets_per_answer(std::size_t n, std::size_t k) {
  if (k < 1 || k >= n) throw ArgumentError("triplets_per_answer needs 1 <= k < n");
  return k * (n - k);
}

struct GridChoice {
  std::size_t n = 0;
  std::size_t k = 0;
  double wage = 0.0;

  friend bool operator==(const GridChoice&, const GridChoice&) = default;
};

/// Largest measured n with k = n/2 whose wage clears the floor. Never extrapolates.
inline std::optional<GridChoice> recommend_grid(const TimingTable& timing, const HitPricing& pricing = {},
                                                double wage_floor = 6.00) {
  validate_timing(timing);
  std::optional<GridChoice> best;
  for (const auto& [nk, seconds] : timing) {
    const auto [n, k] = nk;
    if (n % 2 != 0 || k * 2 != n) continue;
    const double wage = hourly_wage(seconds, pricing);
    if (wage < wage_floor) continue;
    if (!best || n > best->n) best = GridChoice{n, k, wage};
  }
  return best;
}

struct BudgetReport {
  std::size_t screens = 0;
  std::size_t unique_triplets = 0;
  double grid_cost = 0.0;
  double one_at_a_time_cost = 0.0;
  // one_at_a_time_cost / grid_cost; 0 when grid_cost is 0.
  double ratio = 0.0;
};

inline BudgetReport experiment_budget_report(std::size_t screens, std::size_t unique_triplets,
                                             const HitPricing& pricing = {}) {
  BudgetReport r;
  r.screens = screens;
  r.unique_triplets = unique_triplets;
  r.grid_cost = screens_cost(screens, pricing);
  r.one_at_a_time_cost = econ::one_at_a_time_cost(unique_triplets, pricing);
  r.ratio = r.grid_cost > 0.0 ? r.one_at_a_time_cost / r.grid_cost : 0.0;
  return r;
}

}  // namespace tripgrid::econ
