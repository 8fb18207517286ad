#pragma once

// Shared on-disk formats:
//   triplets:   header `probe,near,far`, zero-based indices, one triplet per row
//   embeddings: header `id,x0,...,x{d-1}`, one row per point ordered by id

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tripgrid/core/embedding.hpp"
#include "tripgrid/core/triplet.hpp"
#include "tripgrid/error.hpp"

namespace tripgrid::csv {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, std::string_view what) {
  field = trim(field);
  T value{};
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, value);
  if (field.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw ParseError("bad " + std::string(what) + " '" + std::string(field) + "'", line_no);
  }
  return value;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Reads lines, skipping blanks and `#` comments, tracking 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      return true;
    }
    return false;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

inline void write_triplets(std::ostream& out, std::span<const Triplet> triplets) {
  out << "probe,near,far\n";
  for (const auto& t : triplets) out << t.probe << ',' << t.near << ',' << t.far << '\n';
}

inline std::string triplets_to_string(std::span<const Triplet> triplets) {
  std::ostringstream oss;
  write_triplets(oss, triplets);
  return oss.str();
}

inline std::vector<Triplet> read_triplets(std::istream& in) {
  LineReader reader(in);
  std::string line;
  std::vector<Triplet> out;
  if (!reader.next(line)) return out;
  if (trim(line) != "probe,near,far") throw ParseError("expected header 'probe,near,far'", reader.line_no());
  while (reader.next(line)) {
    const auto fields = split(line);
    if (fields.size() != 3) throw ParseError("expected 3 fields", reader.line_no());
    Triplet t{parse_number<ObjectId>(fields[0], reader.line_no(), "probe"),
              parse_number<ObjectId>(fields[1], reader.line_no(), "near"),
              parse_number<ObjectId>(fields[2], reader.line_no(), "far")};
    if (t.probe == t.near || t.probe == t.far || t.near == t.far) {
      throw ParseError("triplet has repeated indices", reader.line_no());
    }
    out.push_back(t);
  }
  return out;
}

inline std::vector<Triplet> read_triplets_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open triplet file " + path);
  return read_triplets(in);
}

inline void write_triplets_file(const std::string& path, std::span<const Triplet> triplets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write triplet file " + path);
  write_triplets(out, triplets);
  if (!out) throw IoError("write failed for " + path);
}

inline void write_embedding(std::ostream& out, const Embedding& emb) {
  out << "id";
  for (std::size_t j = 0; j < emb.dim(); ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t i = 0; i < emb.n_points(); ++i) {
    out << i;
    for (double v : emb.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

inline Embedding read_embedding(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("empty embedding file", reader.line_no());
  const auto header = split(trim(line));
  if (header.size() < 2 || trim(header[0]) != "id") throw ParseError("expected header 'id,x0,...'", reader.line_no());
  const std::size_t dim = header.size() - 1;

  std::vector<double> coords;
  std::size_t expected_id = 0;
  while (reader.next(line)) {
    const auto fields = split(line);
    if (fields.size() != dim + 1) {
      throw ParseError("expected " + std::to_string(dim + 1) + " fields", reader.line_no());
    }
    const auto id = parse_number<std::size_t>(fields[0], reader.line_no(), "id");
    if (id != expected_id) {
      throw ParseError("expected id " + std::to_string(expected_id) + ", got " + std::to_string(id),
                       reader.line_no());
    }
    ++expected_id;
    for (std::size_t j = 1; j <= dim; ++j) coords.push_back(parse_number<double>(fields[j], reader.line_no(), "coordinate"));
  }
  if (expected_id == 0) throw ParseError("embedding has no rows", reader.line_no());
  return Embedding(expected_id, dim, std::move(coords));
}

inline Embedding read_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path);
  return read_embedding(in);
}

inline void write_embedding_file(const std::string& path, const Embedding& emb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file " + path);
  write_embedding(out, emb);
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace tripgrid::csv
