#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/matrix.hpp"

namespace crsbm {

enum class PopularityMode { constant_one, linear_init, sigmoid };
enum class DistanceKind { squared_euclidean, euclidean };

/// Popularity f as a function of a normalized distance x in [0, 1].
struct PopularityFunction {
  PopularityMode mode = PopularityMode::constant_one;
  double gamma_star = 2.0;
  double beta1 = 1.0;
  double beta2 = 0.0;
  /// Range of the current alpha matrix; only the linear initializer reads it.
  double alpha_min = 0.0;
  double alpha_max = 1.0;
};

/// f(x) for the given mode. The linear initializer is clamped to [1, gamma*].
inline double popularity_eval(const PopularityFunction& pf, double x) {
  switch (pf.mode) {
    case PopularityMode::constant_one:
      return 1.0;
    case PopularityMode::linear_init: {
      const double width = pf.alpha_max - pf.alpha_min;
      const double slope = width > 0.0 ? (pf.gamma_star - 1.0) / width : 0.0;
      return std::clamp(slope * x + 1.0, 1.0, pf.gamma_star);
    }
    case PopularityMode::sigmoid:
      return (pf.gamma_star - 1.0) / (1.0 + std::exp(-pf.beta1 * x + pf.beta2)) + 1.0;
  }
  return 1.0;
}

inline double distance(std::span<const double> a, std::span<const double> b, DistanceKind kind) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    d2 += t * t;
  }
  return kind == DistanceKind::squared_euclidean ? d2 : std::sqrt(d2);
}

/// alpha_ir = D(x_i, zeta_r) / sum_s D(x_i, zeta_s). A node at zero distance from
/// every center gets the uniform row 1/q and is counted in `uniform_rows`.
inline Matrix normalized_distances(const Matrix& x, const Matrix& zeta,
                                   DistanceKind kind = DistanceKind::squared_euclidean,
                                   std::size_t* uniform_rows = nullptr) {
  require(zeta.rows() >= 2, "normalized distances need at least two centers");
  require(x.cols() == zeta.cols(), "attribute and center dimensions differ");
  const std::size_t n = x.rows();
  const std::size_t q = zeta.rows();
  Matrix alpha(n, q);
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = alpha.row(i);
    double total = 0.0;
    for (std::size_t r = 0; r < q; ++r) {
      row[r] = distance(x.row(i), zeta.row(r), kind);
      total += row[r];
    }
    if (!(total > 0.0)) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(q));
      ++flagged;
      continue;
    }
    for (auto& v : row) v /= total;
  }
  if (uniform_rows) *uniform_rows = flagged;
  return alpha;
}

/// Parameter set of the model plus the per-node tables derived from it.
struct CrsbmParams {
  Matrix omega;            // q x q block rates
  std::vector<double> nu;  // group prior
  Matrix zeta;             // q x d centers
  PopularityFunction popularity;
  Matrix alpha;    // n x q normalized distances
  Matrix f_cache;  // n x q, f(alpha)
  bool degree_correction = false;
  DistanceKind distance_kind = DistanceKind::squared_euclidean;

  std::size_t q() const { return omega.rows(); }
};

inline Matrix popularity_table(const Matrix& alpha, const PopularityFunction& pf) {
  Matrix f(alpha.rows(), alpha.cols());
  for (std::size_t k = 0; k < alpha.values().size(); ++k) {
    f.values()[k] = popularity_eval(pf, alpha.values()[k]);
  }
  return f;
}

/// Recomputes alpha from the centers, refreshes alpha_min / alpha_max and the f table.
inline std::size_t refresh_alpha(CrsbmParams& params, const Matrix& x) {
  std::size_t flagged = 0;
  params.alpha = normalized_distances(x, params.zeta, params.distance_kind, &flagged);
  const auto v = params.alpha.values();
  if (!v.empty()) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    params.popularity.alpha_min = *lo;
    params.popularity.alpha_max = *hi;
  }
  params.f_cache = popularity_table(params.alpha, params.popularity);
  return flagged;
}

/// f_is, multiplied by k_i / c when degree correction is on. This is the table the
/// BP equations and the block statistics consume.
inline Matrix effective_popularity(const AttributedGraph& g, const CrsbmParams& params) {
  Matrix f = params.f_cache;
  if (!params.degree_correction) return f;
  const double c = 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes());
  require(c > 0.0, "degree correction on a graph without edges");
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const double scale = static_cast<double>(g.degree(i)) / c;
    for (auto& v : f.row(i)) v *= scale;
  }
  return f;
}

inline constexpr double kMaxEdgeProbability = 1.0 - 1e-12;

/// g_ij * omega_rs with r the group of i and s the group of j. Values above 1 are
/// clipped and counted in `clipped`.
inline double edge_factor(const AttributedGraph& g, const CrsbmParams& params, NodeId i, NodeId j,
                          std::size_t r, std::size_t s, std::size_t* clipped = nullptr) {
  double gij = params.f_cache(i, s) * params.f_cache(j, r);
  if (params.degree_correction) {
    const double c =
        2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes());
    gij *= static_cast<double>(g.degree(i)) / c * static_cast<double>(g.degree(j)) / c;
  }
  const double p = gij * params.omega(r, s);
  if (p > 1.0) {
    if (clipped) ++*clipped;
    return kMaxEdgeProbability;
  }
  return p;
}

/// Block edge counts m_rs (symmetric, diagonal counts each edge once), popularity
/// masses n_r^s and the Poisson exposure Xi_rs = n_r^s n_s^r / (1 + delta_rs).
struct BlockStats {
  Matrix m;
  Matrix n;
  Matrix xi;
};

inline Matrix exposure(const Matrix& n_rs) {
  const std::size_t q = n_rs.rows();
  Matrix xi(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      xi(r, s) = n_rs(r, s) * n_rs(s, r) / (r == s ? 2.0 : 1.0);
    }
  }
  return xi;
}

/// Hard-assignment statistics for partition z, using the effective popularity table.
inline BlockStats block_stats(const AttributedGraph& g, const Partition& z, const Matrix& f_eff) {
  const std::size_t q = z.q;
  require(f_eff.cols() == q && f_eff.rows() == g.num_nodes(), "popularity table shape mismatch");
  require(z.size() == g.num_nodes(), "partition size differs from node count");
  BlockStats st{Matrix(q, q), Matrix(q, q), Matrix()};
  for (auto [i, j] : g.edges()) {
    const auto r = z.labels[i];
    const auto s = z.labels[j];
    st.m(r, s) += 1.0;
    if (r != s) st.m(s, r) += 1.0;
  }
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto r = z.labels[i];
    for (std::size_t s = 0; s < q; ++s) st.n(r, s) += f_eff(i, s);
  }
  st.xi = exposure(st.n);
  return st;
}

/// omega_rs = m_rs (1 + delta_rs) / (n_r^s n_s^r).
inline Matrix mle_omega(const BlockStats& st) {
  const std::size_t q = st.m.rows();
  Matrix omega(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      const double denom = st.n(r, s) * st.n(s, r);
      const double num = st.m(r, s) * (r == s ? 2.0 : 1.0);
      if (denom > 0.0) {
        omega(r, s) = num / denom;
      } else if (num > 0.0) {
        fail(ErrorCode::degenerate, "block (" + std::to_string(r) + ", " + std::to_string(s) +
                                        ") has edges but zero popularity mass");
      }
    }
  }
  return omega;
}

/// nu_r = mean belief in group r.
inline std::vector<double> mle_nu(const Matrix& beliefs) {
  const std::size_t n = beliefs.rows();
  std::vector<double> nu(beliefs.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < nu.size(); ++r) nu[r] += beliefs(i, r);
  }
  for (auto& v : nu) v /= static_cast<double>(n);
  return nu;
}

/// log P(G, z | params) in the Poisson form. Returns -infinity when a block with
/// edges has rate zero.
inline double log_likelihood(const AttributedGraph& g, const Partition& z,
                             const CrsbmParams& params) {
  require(z.q == params.q(), "partition and parameters disagree on q");
  require(params.nu.size() == z.q, "prior length differs from q");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const Matrix f_eff = effective_popularity(g, params);
  double ll = 0.0;
  for (auto r : z.labels) {
    if (params.nu[r] <= 0.0) return neg_inf;
    ll += std::log(params.nu[r]);
  }
  for (auto [i, j] : g.edges()) {
    const double gij = f_eff(i, z.labels[j]) * f_eff(j, z.labels[i]);
    if (gij <= 0.0) return neg_inf;
    ll += std::log(gij);
  }
  const BlockStats st = block_stats(g, z, f_eff);
  for (std::size_t r = 0; r < z.q; ++r) {
    for (std::size_t s = r; s < z.q; ++s) {
      const double w = params.omega(r, s);
      const double m = st.m(r, s);
      if (m > 0.0) {
        if (w <= 0.0) return neg_inf;
        ll += m * std::log(w);
      }
      ll -= st.xi(r, s) * w;
    }
  }
  return ll;
}

}  // namespace crsbm
