#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "crsbm/graph.hpp"

namespace crsbm::testing {

/// Definition-level versions of the partition metrics, written from node sets and
/// label pairs rather than from a confusion table.

inline double entropy_of(const std::vector<std::uint32_t>& labels) {
  std::map<std::uint32_t, double> count;
  for (auto z : labels) count[z] += 1.0;
  const double n = static_cast<double>(labels.size());
  double h = 0;
  for (auto [z, c] : count) h -= c / n * std::log(c / n);
  return h;
}

inline double oracle_nmi(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> pa;
  std::map<std::uint32_t, double> pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double mi = 0;
  for (auto [key, p] : joint) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  const double hs = entropy_of(a) + entropy_of(b);
  if (hs == 0.0) return 1.0;
  return std::clamp(2 * mi / hs, 0.0, 1.0);
}

inline std::vector<std::set<std::size_t>> groups_of(const std::vector<std::uint32_t>& labels) {
  std::map<std::uint32_t, std::set<std::size_t>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].insert(i);
  std::vector<std::set<std::size_t>> out;
  for (auto& [z, s] : m) out.push_back(std::move(s));
  return out;
}

inline double oracle_avg_f1(const std::vector<std::uint32_t>& det, const std::vector<std::uint32_t>& truth) {
  const auto d = groups_of(det);
  const auto t = groups_of(truth);
  auto f1 = [](const std::set<std::size_t>& x, const std::set<std::size_t>& y) {
    std::size_t common = 0;
    for (auto v : x) common += y.count(v);
    return 2.0 * static_cast<double>(common) / static_cast<double>(x.size() + y.size());
  };
  auto side = [&](const auto& from, const auto& to) {
    double tot = 0;
    for (const auto& x : from) {
      double best = 0;
      for (const auto& y : to) best = std::max(best, f1(x, y));
      tot += best;
    }
    return tot / static_cast<double>(from.size());
  };
  return 0.5 * side(t, d) + 0.5 * side(d, t);
}

/// Best agreement over every relabeling of the detected labels in [0, q).
inline double oracle_accuracy(const std::vector<std::uint32_t>& det, const std::vector<std::uint32_t>& truth,
                              std::size_t q) {
  std::vector<std::uint32_t> perm(q);
  std::iota(perm.begin(), perm.end(), 0u);
  std::size_t best = 0;
  do {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < det.size(); ++i) hit += perm[det[i]] == truth[i];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(det.size());
}

/// Q = (1 / 2m) sum_ij (A_ij - k_i k_j / 2m) delta(z_i, z_j), over all ordered pairs.
inline double oracle_modularity(const AttributedGraph& g, const std::vector<std::uint32_t>& z) {
  const double two_m = 2.0 * static_cast<double>(g.num_edges());
  double q = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
      if (z[i] != z[j]) continue;
      const double a = g.has_edge(i, j) ? 1.0 : 0.0;
      q += a - static_cast<double>(g.degree(i)) * static_cast<double>(g.degree(j)) / two_m;
    }
  }
  return q / two_m;
}

/// Calls f(labels) for every labeling of n nodes with values in [0, q).
template <class F>
void for_each_labeling(std::size_t n, std::uint32_t q, F&& f) {
  std::vector<std::uint32_t> z(n, 0);
  while (true) {
    f(z);
    std::size_t k = 0;
    while (k < n && ++z[k] == q) z[k++] = 0;
    if (k == n) return;
  }
}

}  // namespace crsbm::testing
