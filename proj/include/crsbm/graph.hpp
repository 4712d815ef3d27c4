#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/matrix.hpp"

namespace crsbm {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// What was discarded while building a graph from a raw edge list.
struct BuildReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

/// Undirected simple graph in compressed adjacency form plus an n x d attribute
/// matrix. Every undirected edge {i, j} owns two slots: one in i's neighbor range
/// and one in j's. `mate(k)` maps a slot to its twin, which is how directed-edge
/// tables (BP messages) are addressed.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  /// Self-loops and duplicate edges are dropped and counted in `report`.
  static AttributedGraph from_edges(std::size_t n, std::span<const Edge> edges, Matrix attributes,
                                    BuildReport* report = nullptr) {
    if (attributes.rows() != n) {
      fail(ErrorCode::data, "attribute matrix has " + std::to_string(attributes.rows()) +
                                " rows, expected " + std::to_string(n));
    }
    BuildReport local;
    std::vector<Edge> clean;
    clean.reserve(edges.size());
    for (auto [a, b] : edges) {
      if (a >= n || b >= n) {
        fail(ErrorCode::data, "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") references a node outside [0, " + std::to_string(n) + ")");
      }
      if (a == b) {
        ++local.self_loops_dropped;
        continue;
      }
      clean.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(clean.begin(), clean.end());
    const auto last = std::unique(clean.begin(), clean.end());
    local.duplicates_dropped = static_cast<std::size_t>(clean.end() - last);
    clean.erase(last, clean.end());

    AttributedGraph g;
    g.n_ = n;
    g.attributes_ = std::move(attributes);
    g.offsets_.assign(n + 1, 0);
    for (auto [a, b] : clean) {
      ++g.offsets_[a + 1];
      ++g.offsets_[b + 1];
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.adjacency_.resize(2 * clean.size());
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [a, b] : clean) g.adjacency_[cursor[a]++] = b;
    for (auto [a, b] : clean) g.adjacency_[cursor[b]++] = a;
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
    }
    g.owner_.resize(g.adjacency_.size());
    g.mate_.resize(g.adjacency_.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = g.offsets_[i]; k < g.offsets_[i + 1]; ++k) {
        g.owner_[k] = static_cast<NodeId>(i);
        g.mate_[k] = g.slot(g.adjacency_[k], static_cast<NodeId>(i));
      }
    }
    if (report) *report = local;
    return g;
  }

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return adjacency_.size() / 2; }
  std::size_t num_slots() const noexcept { return adjacency_.size(); }
  std::size_t dim() const noexcept { return attributes_.cols(); }

  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  std::size_t slot_begin(NodeId i) const { return offsets_[i]; }
  std::size_t slot_end(NodeId i) const { return offsets_[i + 1]; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {adjacency_.data() + offsets_[i], degree(i)};
  }
  /// Neighbor stored at slot k.
  NodeId target(std::size_t k) const { return adjacency_[k]; }
  /// Node whose neighbor range contains slot k.
  NodeId owner(std::size_t k) const { return owner_[k]; }
  std::size_t mate(std::size_t k) const { return mate_[k]; }

  /// Slot of j within i's neighbor range; throws if the edge does not exist.
  std::size_t slot(NodeId i, NodeId j) const {
    auto range = neighbors(i);
    auto it = std::lower_bound(range.begin(), range.end(), j);
    if (it == range.end() || *it != j) {
      fail(ErrorCode::invalid_argument,
           "nodes " + std::to_string(i) + " and " + std::to_string(j) + " are not adjacent");
    }
    return offsets_[i] + static_cast<std::size_t>(it - range.begin());
  }

  bool has_edge(NodeId i, NodeId j) const {
    auto range = neighbors(i);
    return std::binary_search(range.begin(), range.end(), j);
  }

  const Matrix& attributes() const noexcept { return attributes_; }
  std::span<const double> attribute(NodeId i) const { return attributes_.row(i); }

  /// Each undirected edge once, as (i, j) with i < j, in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId i = 0; i < n_; ++i) {
      for (NodeId j : neighbors(i)) {
        if (i < j) out.emplace_back(i, j);
      }
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
  std::vector<NodeId> owner_;
  std::vector<std::size_t> mate_;
  Matrix attributes_;
};

/// Degree sequence with mean degree c and mean excess degree c_tilde.
struct DegreeStats {
  std::vector<std::size_t> degrees;
  double c = 0.0;
  double c_tilde = 0.0;
};

inline DegreeStats degree_stats(const AttributedGraph& g) {
  const std::size_t n = g.num_nodes();
  if (n == 0) fail(ErrorCode::degenerate, "degree statistics of an empty graph");
  if (g.num_edges() == 0) {
    fail(ErrorCode::degenerate, "graph has no edges: excess degree is undefined");
  }
  DegreeStats s;
  s.degrees.resize(n);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    const auto k = g.degree(i);
    s.degrees[i] = k;
    sum += static_cast<double>(k);
    sum_sq += static_cast<double>(k) * static_cast<double>(k);
  }
  s.c = 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(n);
  s.c_tilde = sum_sq / sum - 1.0;
  return s;
}

/// Hard assignment of every node to one of q groups. Groups may be empty.
struct Partition {
  std::vector<std::uint32_t> labels;
  std::size_t q = 0;

  Partition() = default;
  Partition(std::vector<std::uint32_t> l, std::size_t groups) : labels(std::move(l)), q(groups) {
    for (auto z : labels) {
      if (z >= q) fail(ErrorCode::invalid_argument, "label " + std::to_string(z) + " >= q");
    }
  }

  /// Infers q as 1 + the largest label.
  static Partition from_labels(std::vector<std::uint32_t> l) {
    std::size_t q = 0;
    for (auto z : l) q = std::max<std::size_t>(q, z + 1);
    return Partition(std::move(l), q);
  }

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<std::size_t> group_sizes() const {
    std::vector<std::size_t> sizes(q, 0);
    for (auto z : labels) ++sizes[z];
    return sizes;
  }
};

using GroundTruth = Partition;

}  // namespace crsbm
