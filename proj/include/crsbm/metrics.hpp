#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/matrix.hpp"

namespace crsbm {

/// Overlap table: rows are truth groups, columns detected groups.
struct ConfusionMatrix {
  Matrix counts;
  std::vector<double> row_totals;
  std::vector<double> col_totals;
  double divisor = 1.0;

  /// counts / divisor.
  Matrix normalized() const {
    Matrix out = counts;
    for (auto& v : out.values()) v /= divisor;
    return out;
  }
};

inline void require_same_nodes(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::invalid_argument, "partitions cover " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()) + " nodes");
  }
}

inline ConfusionMatrix confusion(const Partition& detected, const Partition& truth,
                                 std::optional<double> divisor = std::nullopt) {
  require_same_nodes(detected, truth);
  ConfusionMatrix cm;
  cm.counts = Matrix(truth.q, detected.q);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.counts(truth.labels[i], detected.labels[i]) += 1.0;
  cm.row_totals.assign(truth.q, 0.0);
  cm.col_totals.assign(detected.q, 0.0);
  for (std::size_t p = 0; p < truth.q; ++p) {
    for (std::size_t k = 0; k < detected.q; ++k) {
      cm.row_totals[p] += cm.counts(p, k);
      cm.col_totals[k] += cm.counts(p, k);
    }
  }
  if (divisor) {
    require(*divisor > 0.0, "confusion divisor must be positive");
    cm.divisor = *divisor;
  }
  return cm;
}

/// Maximum-weight assignment on a weight matrix (rows <= cols after padding).
/// Returns for each row the chosen column.
inline std::vector<std::size_t> max_weight_assignment(const Matrix& weights) {
  const std::size_t n = std::max(weights.rows(), weights.cols());
  // Potential-based Hungarian method on the padded square cost matrix -weights.
  auto cost = [&](std::size_t r, std::size_t c) {
    return (r < weights.rows() && c < weights.cols()) ? -weights(r, c) : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  assignment.resize(weights.rows());
  return assignment;
}

/// For every truth row, the detected column paired with it under maximal total
/// overlap. Columns beyond the detected count denote padding.
inline std::vector<std::size_t> match_columns(const ConfusionMatrix& cm) {
  return max_weight_assignment(cm.counts);
}

/// Fraction of nodes correctly labeled under the best one-to-one relabeling.
inline double accuracy(const Partition& detected, const Partition& truth) {
  require_same_nodes(detected, truth);
  require(truth.size() > 0, "accuracy of an empty partition");
  const ConfusionMatrix cm = confusion(detected, truth);
  const auto match = match_columns(cm);
  double hit = 0.0;
  for (std::size_t p = 0; p < match.size(); ++p) {
    if (match[p] < cm.counts.cols()) hit += cm.counts(p, match[p]);
  }
  return hit / static_cast<double>(truth.size());
}

inline double nmi(const Partition& a, const Partition& b) {
  require_same_nodes(a, b);
  require(a.size() > 0, "NMI of an empty partition");
  const ConfusionMatrix cm = confusion(a, b);
  const double n = static_cast<double>(a.size());
  double num = 0.0;
  for (std::size_t p = 0; p < cm.counts.rows(); ++p) {
    for (std::size_t k = 0; k < cm.counts.cols(); ++k) {
      const double npq = cm.counts(p, k);
      if (npq > 0.0) num += npq * std::log(npq * n / (cm.row_totals[p] * cm.col_totals[k]));
    }
  }
  double den = 0.0;
  for (double t : cm.row_totals) {
    if (t > 0.0) den += t * std::log(t / n);
  }
  for (double t : cm.col_totals) {
    if (t > 0.0) den += t * std::log(t / n);
  }
  if (den == 0.0) return 1.0;  // both sides a single group
  return std::clamp(-2.0 * num / den, 0.0, 1.0);
}

/// Symmetric best-match F1 over non-empty groups.
inline double avg_f1(const Partition& detected, const Partition& truth) {
  require_same_nodes(detected, truth);
  require(truth.size() > 0, "F1 of an empty partition");
  const ConfusionMatrix cm = confusion(detected, truth);
  auto f1 = [&](std::size_t p, std::size_t k) {
    return 2.0 * cm.counts(p, k) / (cm.row_totals[p] + cm.col_totals[k]);
  };
  double truth_side = 0.0;
  std::size_t truth_groups = 0;
  for (std::size_t p = 0; p < cm.counts.rows(); ++p) {
    if (cm.row_totals[p] == 0.0) continue;
    double best = 0.0;
    for (std::size_t k = 0; k < cm.counts.cols(); ++k) {
      if (cm.col_totals[k] > 0.0) best = std::max(best, f1(p, k));
    }
    truth_side += best;
    ++truth_groups;
  }
  double detected_side = 0.0;
  std::size_t detected_groups = 0;
  for (std::size_t k = 0; k < cm.counts.cols(); ++k) {
    if (cm.col_totals[k] == 0.0) continue;
    double best = 0.0;
    for (std::size_t p = 0; p < cm.counts.rows(); ++p) {
      if (cm.row_totals[p] > 0.0) best = std::max(best, f1(p, k));
    }
    detected_side += best;
    ++detected_groups;
  }
  return 0.5 * truth_side / static_cast<double>(truth_groups) +
         0.5 * detected_side / static_cast<double>(detected_groups);
}

/// A cover is a list of (possibly overlapping) node sets.
using Cover = std::vector<std::vector<NodeId>>;

inline Cover cover_from_partition(const Partition& p) {
  Cover c(p.q);
  for (std::size_t i = 0; i < p.size(); ++i) c[p.labels[i]].push_back(static_cast<NodeId>(i));
  std::erase_if(c, [](const auto& s) { return s.empty(); });
  return c;
}

namespace detail {

inline double h_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

/// Normalized conditional entropy H(X|Y) averaged over the sets of X.
inline double lfk_conditional(const std::vector<std::vector<bool>>& x,
                              const std::vector<std::vector<bool>>& y, double n) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& xk : x) {
    const double px = static_cast<double>(std::count(xk.begin(), xk.end(), true)) / n;
    const double hx = h_term(px) + h_term(1.0 - px);
    ++counted;
    if (hx <= 0.0) continue;
    double best = hx;
    for (const auto& yl : y) {
      double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
      for (std::size_t i = 0; i < xk.size(); ++i) {
        if (xk[i] && yl[i]) ++n11;
        else if (xk[i]) ++n10;
        else if (yl[i]) ++n01;
        else ++n00;
      }
      const double h11 = h_term(n11 / n), h10 = h_term(n10 / n);
      const double h01 = h_term(n01 / n), h00 = h_term(n00 / n);
      if (h11 + h00 <= h01 + h10) continue;
      const double py = (n11 + n01) / n;
      const double hy = h_term(py) + h_term(1.0 - py);
      best = std::min(best, h11 + h10 + h01 + h00 - hy);
    }
    total += best / hx;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace detail

/// Overlapping NMI over membership indicators (Lancichinetti-Fortunato-Kertesz).
/// The node universe is every node appearing in either cover.
inline double onmi(const Cover& detected, const Cover& truth) {
  require(!detected.empty() && !truth.empty(), "ONMI of an empty cover");
  std::vector<NodeId> universe;
  for (const auto* cover : {&detected, &truth}) {
    for (const auto& set : *cover) universe.insert(universe.end(), set.begin(), set.end());
  }
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  require(!universe.empty(), "ONMI of covers without nodes");
  auto index = [&](NodeId v) {
    return static_cast<std::size_t>(std::lower_bound(universe.begin(), universe.end(), v) -
                                    universe.begin());
  };
  auto indicators = [&](const Cover& cover) {
    std::vector<std::vector<bool>> out;
    for (const auto& set : cover) {
      std::vector<bool> row(universe.size(), false);
      for (NodeId v : set) row[index(v)] = true;
      out.push_back(std::move(row));
    }
    return out;
  };
  const auto x = indicators(detected);
  const auto y = indicators(truth);
  const double n = static_cast<double>(universe.size());
  const double hxy = detail::lfk_conditional(x, y, n);
  const double hyx = detail::lfk_conditional(y, x, n);
  return std::clamp(1.0 - 0.5 * (hxy + hyx), 0.0, 1.0);
}

/// Girvan-Newman modularity.
inline double modularity(const AttributedGraph& g, const Partition& p) {
  require(p.size() == g.num_nodes(), "partition size differs from node count");
  const double m = static_cast<double>(g.num_edges());
  if (m == 0.0) fail(ErrorCode::degenerate, "modularity of a graph without edges");
  std::vector<double> inside(p.q, 0.0);
  std::vector<double> degree(p.q, 0.0);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    degree[p.labels[i]] += static_cast<double>(g.degree(i));
    for (NodeId j : g.neighbors(i)) {
      if (i < j && p.labels[i] == p.labels[j]) inside[p.labels[i]] += 1.0;
    }
  }
  double q = 0.0;
  for (std::size_t r = 0; r < p.q; ++r) {
    const double share = degree[r] / (2.0 * m);
    q += inside[r] / m - share * share;
  }
  return q;
}

}  // namespace crsbm
