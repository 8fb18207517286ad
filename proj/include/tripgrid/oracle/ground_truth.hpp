#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tripgrid/core/csv_io.hpp"
#include "tripgrid/core/embedding.hpp"
#include "tripgrid/core/tste.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid {

/// Labeled feature vectors whose Euclidean distances stand in for perceptual similarity.
struct GroundTruth {
  Embedding vectors;
  std::vector<std::int64_t> labels;
  std::vector<std::string> names;

  std::size_t size() const noexcept { return vectors.n_points(); }

  void validate() const {
    vectors.require_finite();
    if (labels.size() != vectors.n_points()) throw ArgumentError("ground truth: labels length != N");
    if (!names.empty() && names.size() != vectors.n_points()) throw ArgumentError("ground truth: names length != N");
  }
};

/// Gaussian clusters: centers ~ 10 * N(0, I), points ~ center + spread * N(0, I).
/// Point i belongs to cluster i mod n_clusters.
inline GroundTruth generate_mixture_dataset(std::size_t n_points, std::size_t n_clusters, std::size_t dim, double spread,
                                            std::uint64_t seed) {
  if (n_clusters < 1 || n_points < n_clusters) throw ArgumentError("mixture: need n_points >= n_clusters >= 1");
  if (dim < 1) throw ArgumentError("mixture: dim must be >= 1");
  if (!(spread >= 0.0) || !std::isfinite(spread)) throw ArgumentError("mixture: spread must be finite and >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Embedding centers(n_clusters, dim);
  for (double& v : centers.data()) v = 10.0 * normal(rng);

  GroundTruth gt{Embedding(n_points, dim), std::vector<std::int64_t>(n_points), {}};
  for (std::size_t i = 0; i < n_points; ++i) {
    const std::size_t c = i % n_clusters;
    gt.labels[i] = static_cast<std::int64_t>(c);
    for (std::size_t k = 0; k < dim; ++k) gt.vectors(i, k) = centers(c, k) + spread * normal(rng);
  }
  return gt;
}

/// Vector CSV: header `id,label,v0,...,v{D-1}`; ids must be dense from 0 in any row order.
inline GroundTruth read_vectors(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("empty vector file", reader.line_no());
  const auto header = csv::split(csv::trim(line));
  if (header.size() < 3 || csv::trim(header[0]) != "id" || csv::trim(header[1]) != "label") {
    throw ParseError("expected header 'id,label,v0,...'", reader.line_no());
  }
  const std::size_t dim = header.size() - 2;

  struct Row {
    std::int64_t label;
    std::vector<double> v;
  };
  std::map<std::size_t, Row> rows;
  std::map<std::size_t, std::size_t> line_of;
  while (reader.next(line)) {
    const auto fields = csv::split(line);
    if (fields.size() != dim + 2) {
      throw ParseError("expected " + std::to_string(dim + 2) + " fields, got " + std::to_string(fields.size()),
                       reader.line_no());
    }
    const auto id = csv::parse_number<std::size_t>(fields[0], reader.line_no(), "id");
    Row row{csv::parse_number<std::int64_t>(fields[1], reader.line_no(), "label"), {}};
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = csv::parse_number<double>(fields[k + 2], reader.line_no(), "value");
      if (!std::isfinite(v)) throw ParseError("non-finite value", reader.line_no());
      row.v.push_back(v);
    }
    if (!rows.emplace(id, std::move(row)).second) throw ParseError("duplicate id " + std::to_string(id), reader.line_no());
    line_of[id] = reader.line_no();
  }
  if (rows.empty()) throw ParseError("vector file has no rows", reader.line_no());

  std::size_t expected = 0;
  for (const auto& [id, _] : rows) {
    if (id != expected) {
      throw ParseError("ids not dense: missing id " + std::to_string(expected) + " (next id " + std::to_string(id) + ")",
                       line_of[id]);
    }
    ++expected;
  }

  GroundTruth gt{Embedding(rows.size(), dim), {}, {}};
  for (const auto& [id, row] : rows) {
    gt.labels.push_back(row.label);
    for (std::size_t k = 0; k < dim; ++k) gt.vectors(id, k) = row.v[k];
  }
  return gt;
}

inline GroundTruth load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vector file " + path);
  return read_vectors(in);
}

inline void write_vectors(std::ostream& out, const GroundTruth& gt) {
  out << "id,label";
  for (std::size_t k = 0; k < gt.vectors.dim(); ++k) out << ",v" << k;
  out << '\n';
  for (std::size_t i = 0; i < gt.size(); ++i) {
    out << i << ',' << gt.labels.at(i);
    for (double v : gt.vectors.row(i)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

inline void save_vectors(const std::string& path, const GroundTruth& gt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vector file " + path);
  write_vectors(out, gt);
  if (!out) throw IoError("write failed for " + path);
}

/// Turns a triplet-only dataset into an oracle substrate: the fitted t-STE
/// embedding becomes the vectors, every label is 0.
inline GroundTruth bootstrap_ground_truth(const std::string& triplet_file, std::size_t n_objects, std::size_t dim,
                                          TsteConfig config) {
  const auto triplets = csv::read_triplets_file(triplet_file);
  config.dim = dim;
  GroundTruth gt{tste_fit(triplets, n_objects, config), std::vector<std::int64_t>(n_objects, 0), {}};
  return gt;
}

}  // namespace tripgrid
