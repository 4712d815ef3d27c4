#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/matrix.hpp"

namespace crsbm {

enum class AttributeFormat { dense_csv, sparse_triplet };

namespace detail {

inline std::string location(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Blank lines and lines starting with '#' carry no data.
inline bool is_blank(std::string_view s) {
  s = trim(s);
  return s.empty() || s.front() == '#';
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::data, "cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::data, "cannot write " + path);
  return out;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline std::vector<Edge> read_edge_list(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    NodeId a = 0;
    NodeId b = 0;
    if (tokens.size() != 2 || !detail::parse_number(tokens[0], a) ||
        !detail::parse_number(tokens[1], b)) {
      fail(ErrorCode::data, detail::location(path, lineno) +
                                ": expected two non-negative integer node ids");
    }
    edges.emplace_back(a, b);
  }
  return edges;
}

/// Dense CSV, one row per node. A first line of exactly two integers "n,d" is a
/// header when the rest of the file has n rows of d values; otherwise it is data.
inline Matrix read_dense_attributes(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    std::vector<double> row;
    for (auto tok : detail::split_commas(detail::trim(line))) {
      double v = 0.0;
      if (!detail::parse_number(tok, v)) {
        fail(ErrorCode::data,
             detail::location(path, lineno) + ": cannot parse '" + std::string(tok) + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
    row_lines.push_back(lineno);
  }
  std::size_t first = 0;
  if (!rows.empty() && rows[0].size() == 2) {
    const double hn = rows[0][0];
    const double hd = rows[0][1];
    const bool integral = hn >= 0 && hd >= 1 && hn == static_cast<double>(static_cast<std::size_t>(hn)) &&
                          hd == static_cast<double>(static_cast<std::size_t>(hd));
    if (integral && rows.size() - 1 == static_cast<std::size_t>(hn)) {
      bool widths = true;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        widths = widths && rows[r].size() == static_cast<std::size_t>(hd);
      }
      if (widths) first = 1;
    }
  }
  const std::size_t n = rows.size() - first;
  const std::size_t d = n > 0 ? rows[first].size() : 0;
  Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[first + r];
    if (row.size() != d) {
      fail(ErrorCode::data, detail::location(path, row_lines[first + r]) + ": expected " +
                                std::to_string(d) + " values, found " + std::to_string(row.size()));
    }
    std::copy(row.begin(), row.end(), x.row(r).begin());
  }
  return x;
}

/// Sparse triplets: header "n d", then "i j value" lines. Unlisted entries are 0;
/// a repeated (i, j) keeps the last value.
inline Matrix read_sparse_attributes(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  Matrix x;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    if (!have_header) {
      std::size_t n = 0;
      std::size_t d = 0;
      if (tokens.size() != 2 || !detail::parse_number(tokens[0], n) ||
          !detail::parse_number(tokens[1], d)) {
        fail(ErrorCode::data, detail::location(path, lineno) + ": expected header \"n d\"");
      }
      x = Matrix(n, d);
      have_header = true;
      continue;
    }
    std::size_t i = 0;
    std::size_t j = 0;
    double v = 0.0;
    if (tokens.size() != 3 || !detail::parse_number(tokens[0], i) ||
        !detail::parse_number(tokens[1], j) || !detail::parse_number(tokens[2], v)) {
      fail(ErrorCode::data, detail::location(path, lineno) + ": expected \"i j value\"");
    }
    if (i >= x.rows() || j >= x.cols()) {
      fail(ErrorCode::data, detail::location(path, lineno) + ": entry (" + std::to_string(i) +
                                ", " + std::to_string(j) + ") outside declared shape");
    }
    x(i, j) = v;
  }
  if (!have_header) fail(ErrorCode::data, path + ": missing \"n d\" header");
  return x;
}

struct LoadedGraph {
  AttributedGraph graph;
  BuildReport report;
};

/// Node count comes from the attribute file; edges must reference ids below it.
inline LoadedGraph load_graph(const std::string& edges_path, const std::string& attributes_path,
                              AttributeFormat format) {
  Matrix x = format == AttributeFormat::dense_csv ? read_dense_attributes(attributes_path)
                                                  : read_sparse_attributes(attributes_path);
  const auto edges = read_edge_list(edges_path);
  LoadedGraph out;
  const std::size_t n = x.rows();
  out.graph = AttributedGraph::from_edges(n, edges, std::move(x), &out.report);
  return out;
}

inline void write_edge_list(const AttributedGraph& g, const std::string& path) {
  auto out = detail::open_output(path);
  for (auto [i, j] : g.edges()) out << i << ' ' << j << '\n';
}

/// Always writes the "n,d" header so the file reloads to the same shape.
inline void write_dense_attributes(const Matrix& x, const std::string& path) {
  auto out = detail::open_output(path);
  out << x.rows() << ',' << x.cols() << '\n';
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << detail::format_double(row[c]);
    }
    out << '\n';
  }
}

inline void write_sparse_attributes(const Matrix& x, const std::string& path) {
  auto out = detail::open_output(path);
  out << x.rows() << ' ' << x.cols() << '\n';
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (x(r, c) != 0.0) out << r << ' ' << c << ' ' << detail::format_double(x(r, c)) << '\n';
    }
  }
}

/// "i label" lines. Missing nodes are an error; labels are kept as given.
inline Partition read_partition(const std::string& path, std::size_t n) {
  auto in = detail::open_input(path);
  std::vector<std::uint32_t> labels(n, 0);
  std::vector<bool> seen(n, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    std::size_t i = 0;
    std::uint32_t z = 0;
    if (tokens.size() != 2 || !detail::parse_number(tokens[0], i) ||
        !detail::parse_number(tokens[1], z)) {
      fail(ErrorCode::data, detail::location(path, lineno) + ": expected \"i label\"");
    }
    if (i >= n) {
      fail(ErrorCode::data, detail::location(path, lineno) + ": node " + std::to_string(i) +
                                " out of range [0, " + std::to_string(n) + ")");
    }
    labels[i] = z;
    seen[i] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) fail(ErrorCode::data, path + ": no label for node " + std::to_string(i));
  }
  return Partition::from_labels(std::move(labels));
}

/// Reads "i label" lines without a known n; n is 1 + the largest node id.
inline Partition read_partition(const std::string& path) {
  auto in = detail::open_input(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::is_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    std::size_t i = 0;
    if (!tokens.empty() && detail::parse_number(tokens[0], i)) n = std::max(n, i + 1);
  }
  return read_partition(path, n);
}

inline void write_partition(const Partition& p, const std::string& path) {
  auto out = detail::open_output(path);
  for (std::size_t i = 0; i < p.size(); ++i) out << i << ' ' << p.labels[i] << '\n';
}

/// Plain numeric CSV with an optional header row.
inline void write_matrix_csv(const Matrix& m, const std::string& path,
                             const std::vector<std::string>& header = {}) {
  auto out = detail::open_output(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out << (c ? "," : "") << detail::format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace crsbm
