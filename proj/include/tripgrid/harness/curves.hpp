#pragma once

// Learning-curve table: `#` comment lines, then
//   strategy,seed,screens,triplets_total,triplets_unique,dollars,tge,loo_nn
// Rows follow the curve order, checkpoints ascending. Doubles use the shortest
// round-trip representation, so parsing recovers them exactly.

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tripgrid/core/csv_io.hpp"
#include "tripgrid/harness/config.hpp"
#include "tripgrid/harness/experiment.hpp"

namespace tripgrid::harness {

inline constexpr std::string_view kCurvesHeader = "strategy,seed,screens,triplets_total,triplets_unique,dollars,tge,loo_nn";

inline void write_curves(std::ostream& out, std::span<const Curve> curves, const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << kCurvesHeader << '\n';
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      out << curve.strategy << ',' << curve.seed << ',' << p.screens << ',' << p.triplets_total << ','
          << p.triplets_unique << ',' << csv::format_double(p.dollars) << ',' << csv::format_double(p.tge) << ','
          << csv::format_double(p.loo_nn) << '\n';
    }
  }
}

inline std::string curves_to_string(std::span<const Curve> curves, const std::vector<std::string>& comments = {}) {
  std::ostringstream os;
  write_curves(os, curves, comments);
  return os.str();
}

/// Writes the table with the compact config as a comment line.
inline void emit_curves_csv(const std::string& path, std::span<const Curve> curves, const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write curves file " + path);
  write_curves(out, curves,
               {"tripgrid learning curves",
                "dollars: grid strategies use screens_cost(screens); random_triplet and ckl use "
                "one_at_a_time_cost(screens)",
                "ckl refits its working embedding every " + std::to_string(config.ckl_refit_every) + " answers",
                "config " + to_json(config).dump()});
  if (!out) throw IoError("write failed for " + path);
}

/// Rows sharing (strategy, seed) are grouped into one curve, in first-appearance order.
/// empty_fit is recovered as triplets_unique == 0.
inline std::vector<Curve> read_curves(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || csv::trim(line) != kCurvesHeader) {
    throw ParseError("expected header '" + std::string(kCurvesHeader) + "'", reader.line_no());
  }
  std::vector<Curve> curves;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
  while (reader.next(line)) {
    const auto n = reader.line_no();
    const auto f = csv::split(line);
    if (f.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(f.size()), n);
    const std::string strategy(csv::trim(f[0]));
    if (strategy.empty()) throw ParseError("empty strategy", n);
    const auto seed = csv::parse_number<std::uint64_t>(f[1], n, "seed");
    CurvePoint p;
    p.screens = csv::parse_number<std::size_t>(f[2], n, "screens");
    p.triplets_total = csv::parse_number<std::size_t>(f[3], n, "triplets_total");
    p.triplets_unique = csv::parse_number<std::size_t>(f[4], n, "triplets_unique");
    p.dollars = csv::parse_number<double>(f[5], n, "dollars");
    p.tge = csv::parse_number<double>(f[6], n, "tge");
    p.loo_nn = csv::parse_number<double>(f[7], n, "loo_nn");
    p.empty_fit = p.triplets_unique == 0;
    auto [it, inserted] = index.try_emplace({strategy, seed}, curves.size());
    if (inserted) curves.push_back({strategy, seed, {}});
    auto& pts = curves[it->second].points;
    if (!pts.empty() && pts.back().screens >= p.screens) throw ParseError("screens must ascend within a curve", n);
    pts.push_back(p);
  }
  return curves;
}

inline std::vector<Curve> read_curves_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open curves file " + path);
  return read_curves(in);
}

// ---- summaries ----------------------------------------------------------------

inline double median(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct StrategySummary {
  std::string strategy;
  std::size_t seeds = 0;
  double median_final_tge = 0.0;
  double median_final_loo_nn = 0.0;
  double median_final_dollars = 0.0;
};

/// Per strategy, seed-medians of the last checkpoint.
inline std::vector<StrategySummary> summarize(std::span<const Curve> curves) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CurvePoint*>> finals;
  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    if (!finals.contains(c.strategy)) order.push_back(c.strategy);
    finals[c.strategy].push_back(&c.points.back());
  }
  std::vector<StrategySummary> out;
  for (const auto& s : order) {
    std::vector<double> tge, loo, usd;
    for (const auto* p : finals[s]) {
      tge.push_back(p->tge);
      loo.push_back(p->loo_nn);
      usd.push_back(p->dollars);
    }
    out.push_back({s, tge.size(), median(tge), median(loo), median(usd)});
  }
  return out;
}

inline json summary_json(std::span<const StrategySummary> s) {
  json arr = json::array();
  for (const auto& x : s) {
    arr.push_back({{"strategy", x.strategy},
                   {"seeds", x.seeds},
                   {"median_final_tge", x.median_final_tge},
                   {"median_final_loo_nn", x.median_final_loo_nn},
                   {"median_final_dollars", x.median_final_dollars}});
  }
  return arr;
}

}  // namespace tripgrid::harness
