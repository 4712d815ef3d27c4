#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/random.hpp"

namespace crsbm::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = info ? std::string(info->test_suite_name()) + "_" + info->name() : "crsbm";
    path_ = std::filesystem::temp_directory_path() / ("crsbm_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = file(name);
    std::ofstream(p) << text;
    return p;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Graph with a zero-width attribute matrix.
inline AttributedGraph plain_graph(std::size_t n, const std::vector<Edge>& edges, std::size_t d = 1) {
  return AttributedGraph::from_edges(n, edges, Matrix(n, d));
}

/// Erdos-Renyi G(n, m) edge set, possibly with repeats.
inline std::vector<Edge> random_edges(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng = substream(seed, 0x7e57);
  std::vector<Edge> edges;
  while (edges.size() < m) {
    const auto a = static_cast<NodeId>(uniform_index(rng, n));
    const auto b = static_cast<NodeId>(uniform_index(rng, n));
    if (a != b) edges.emplace_back(a, b);
  }
  return edges;
}

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected crsbm::Error";
  return ErrorCode::invalid_argument;
}

}  // namespace crsbm::testing
