#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <unsupported/Eigen/Polynomials>

#include "crsbm/bp.hpp"
#include "crsbm/detectability.hpp"
#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/matrix.hpp"
#include "crsbm/metrics.hpp"
#include "crsbm/model.hpp"
#include "crsbm/random.hpp"

namespace crsbm {

struct LearnerConfig {
  std::size_t q = 2;
  std::size_t tau_max = 10;
  double mu = 0.05;
  std::size_t n_grids = 10;
  std::uint64_t seed = 1;
  std::size_t bp_max_sweeps = 100;
  double bp_tol = 1e-6;
  bool degree_correction = false;
  DistanceKind distance_kind = DistanceKind::squared_euclidean;
  bool warm_start = true;
};

inline void validate(const LearnerConfig& c) {
  require(c.q >= 2, "q must be at least 2");
  require(c.tau_max >= 1, "tau_max must be at least 1");
  require(c.mu > 0.0 && c.mu < 1.0, "mu must lie in (0, 1)");
  require(c.n_grids >= 2, "at least two grids are needed");
  require(c.bp_max_sweeps >= 1 && c.bp_tol > 0.0, "invalid BP settings");
}

/// k-means++ D^2 seeding. When fewer than q rows are distinct the remaining
/// centers repeat existing ones and `duplicates` is set.
inline Matrix init_centers(const Matrix& x, std::size_t q, std::uint64_t seed,
                           bool* duplicates = nullptr) {
  const std::size_t n = x.rows();
  require(n >= q && q >= 1, "need at least q attribute rows");
  Rng rng = substream(seed, 0x6b6d, 0);
  Matrix centers(q, x.cols());
  auto copy_row = [&](std::size_t center, std::size_t node) {
    std::copy(x.row(node).begin(), x.row(node).end(), centers.row(center).begin());
  };
  copy_row(0, uniform_index(rng, n));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    nearest[i] = distance(x.row(i), centers.row(0), DistanceKind::squared_euclidean);
  }
  bool dup = false;
  for (std::size_t c = 1; c < q; ++c) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] > 0.0 && u < nearest[i]) {
          pick = i;
          break;
        }
        u -= nearest[i];
      }
      while (nearest[pick] <= 0.0) --pick;  // rounding fell past the last weight
    } else {
      dup = true;
      pick = uniform_index(rng, n);
    }
    copy_row(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], distance(x.row(i), centers.row(c),
                                                 DistanceKind::squared_euclidean));
    }
  }
  if (duplicates) *duplicates = dup;
  return centers;
}

struct GammaStar {
  double gamma = 1.0;
  std::optional<double> gamma_a;  // detectability bound, when it exists
  double gamma_b = 1.0;           // growth-rate bound
};

/// Largest root above 1 of epsilon*_gamma = 1 with two brothers per category.
inline std::optional<double> gamma_from_threshold(std::size_t q_star, double c_tilde) {
  if (q_star < 4 || !(c_tilde > 4.0)) return std::nullopt;
  const double qs = static_cast<double>(q_star);
  const double root = std::sqrt(c_tilde);
  const double a = qs - 3.0 + root;
  Eigen::Vector4d coeffs;  // ascending powers
  coeffs << 2.0 * (qs - 2.0), a * (qs - 2.0), 2.0, (2.0 - root) * (qs - 2.0);
  Eigen::PolynomialSolver<double, 3> solver(coeffs);
  std::optional<double> best;
  for (Eigen::Index k = 0; k < solver.roots().size(); ++k) {
    const auto z = solver.roots()[k];
    if (std::abs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z.real()))) continue;
    if (z.real() > 1.0 && (!best || z.real() > *best)) best = z.real();
  }
  if (!best) return best;
  // Polish against the threshold itself.
  double g = *best;
  for (int it = 0; it < 50; ++it) {
    const double h = 1e-7 * g;
    const double r = threshold_epsilon(q_star, 2, g, c_tilde) - 1.0;
    const double dr = (threshold_epsilon(q_star, 2, g + h, c_tilde) -
                       threshold_epsilon(q_star, 2, g - h, c_tilde)) / (2.0 * h);
    if (dr == 0.0 || std::abs(r) < 1e-15) break;
    const double step = r / dr;
    g -= step;
    if (std::abs(step) < 1e-15 * g) break;
  }
  return g;
}

inline GammaStar solve_gamma_star(std::size_t q_star, double c_tilde, double mu) {
  require(q_star >= 2 && c_tilde > 0.0, "invalid arguments for gamma*");
  require(mu > 0.0 && mu < 1.0, "mu must lie in (0, 1)");
  GammaStar out;
  out.gamma_b = std::cbrt(4.0 / mu);
  out.gamma_a = gamma_from_threshold(q_star, c_tilde);
  out.gamma = out.gamma_a ? std::min(*out.gamma_a, out.gamma_b) : out.gamma_b;
  return out;
}

/// Popularity targets on a uniform grid over [alpha_min, alpha_max].
struct FSamples {
  std::vector<double> x;  // grid midpoints
  double dx = 0.0;        // half-width
  std::vector<double> mean_belief;
  std::vector<double> delta;
  std::vector<double> f0;
  std::vector<double> target;
  std::vector<std::size_t> count;

  std::vector<std::size_t> occupied() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < count.size(); ++k) {
      if (count[k] > 0) out.push_back(k);
    }
    return out;
  }
};

/// Bins every (node, group) pair by alpha into n_grids half-open bins (the last
/// one closed) and averages the corresponding beliefs.
inline FSamples update_f_samples(const Matrix& alpha, const Matrix& beliefs,
                                 const PopularityFunction& pf, std::size_t n_grids) {
  require(alpha.rows() == beliefs.rows() && alpha.cols() == beliefs.cols(),
          "alpha and beliefs differ in shape");
  require(n_grids >= 1, "need at least one grid");
  const std::size_t q = alpha.cols();
  const double lo = pf.alpha_min;
  const double hi = pf.alpha_max;
  const double width = hi - lo;
  FSamples s;
  s.dx = width / (2.0 * static_cast<double>(n_grids));
  s.x.resize(n_grids);
  for (std::size_t k = 0; k < n_grids; ++k) s.x[k] = lo + (2.0 * static_cast<double>(k) + 1.0) * s.dx;
  s.mean_belief.assign(n_grids, 0.0);
  s.count.assign(n_grids, 0);
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    for (std::size_t r = 0; r < q; ++r) {
      const double a = alpha(i, r);
      std::size_t k = 0;
      if (width > 0.0) {
        const double pos = (a - lo) / width * static_cast<double>(n_grids);
        k = pos <= 0.0 ? 0 : std::min(n_grids - 1, static_cast<std::size_t>(pos));
      }
      s.mean_belief[k] += beliefs(i, r);
      ++s.count[k];
    }
  }
  if (s.occupied().empty()) fail(ErrorCode::degenerate, "no (node, group) pair falls in any grid");
  PopularityFunction linear = pf;
  linear.mode = PopularityMode::linear_init;
  s.delta.assign(n_grids, 0.0);
  s.f0.assign(n_grids, 0.0);
  s.target.assign(n_grids, 0.0);
  const double qd = static_cast<double>(q);
  for (std::size_t k = 0; k < n_grids; ++k) {
    s.f0[k] = popularity_eval(linear, s.x[k]);
    if (s.count[k] == 0) continue;
    const double m = s.mean_belief[k] / static_cast<double>(s.count[k]);
    s.mean_belief[k] = m;
    s.delta[k] = std::clamp(2.0 * m / (m + (1.0 - m) / (qd - 1.0)) - 1.0, -1.0, 1.0);
    const double b = s.delta[k] > 0.0 ? 1.0 : pf.gamma_star;
    s.target[k] = s.f0[k] + std::abs(s.delta[k]) * (b - s.f0[k]);
  }
  return s;
}

struct BetaFit {
  double beta1 = 1.0;
  double beta2 = 0.0;
  std::size_t points = 0;
  bool kept_previous = false;
  bool coerced = false;  // slope was non-positive and floored
};

inline constexpr double kTargetClamp = 1e-6;
inline constexpr double kMinBeta1 = 1e-6;

/// Least squares on y~ = log(gamma* - y) - log(y - 1) against x~ = -x, which is
/// linear in (beta1, beta2) for the sigmoid popularity.
inline BetaFit fit_beta_lsm(std::span<const double> x, std::span<const double> y,
                            double gamma_star, double prev_beta1 = 1.0, double prev_beta2 = 0.0) {
  require(x.size() == y.size(), "sample lengths differ");
  BetaFit fit;
  fit.beta1 = prev_beta1;
  fit.beta2 = prev_beta2;
  fit.points = x.size();
  if (x.size() < 2) {
    fit.kept_previous = true;
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double yc = std::clamp(y[k], 1.0 + kTargetClamp, gamma_star - kTargetClamp);
    const double xt = -x[k];
    const double yt = std::log(gamma_star - yc) - std::log(yc - 1.0);
    sx += xt;
    sy += yt;
    sxx += xt * xt;
    sxy += xt * yt;
  }
  const double var = sxx - sx * sx / n;
  if (!(var > 0.0)) {
    fit.kept_previous = true;
    return fit;
  }
  fit.beta1 = (sxy - sx * sy / n) / var;
  fit.beta2 = (sy - fit.beta1 * sx) / n;
  if (!(fit.beta1 >= kMinBeta1)) {
    fit.beta1 = kMinBeta1;
    fit.beta2 = (sy - fit.beta1 * sx) / n;
    fit.coerced = true;
  }
  return fit;
}

inline BetaFit fit_beta_lsm(const FSamples& s, double gamma_star, double prev_beta1 = 1.0,
                            double prev_beta2 = 0.0) {
  std::vector<double> x;
  std::vector<double> y;
  for (auto k : s.occupied()) {
    x.push_back(s.x[k]);
    y.push_back(s.target[k]);
  }
  return fit_beta_lsm(x, y, gamma_star, prev_beta1, prev_beta2);
}

/// kappa_is = sum_j a_ij psi_s^j.
inline Matrix soft_group_degrees(const AttributedGraph& g, const Matrix& beliefs) {
  Matrix kappa(g.num_nodes(), beliefs.cols());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto row = kappa.row(i);
    for (NodeId j : g.neighbors(i)) {
      const auto b = beliefs.row(j);
      for (std::size_t s = 0; s < row.size(); ++s) row[s] += b[s];
    }
  }
  return kappa;
}

struct ZetaUpdate {
  Matrix zeta;
  std::vector<bool> retained;  // group had zero weight and kept its old center
};

/// Weighted center update. w_is = alpha_is (1 - alpha_is) / |x_i - zeta_s|^2, which
/// for squared distances equals (1 - alpha_is) / sum_r D_ir and stays finite at a center.
/// The squared deviation of f_is from its group mean is averaged over the belief of i.
inline ZetaUpdate update_zeta(const AttributedGraph& g, const Matrix& beliefs,
                              const CrsbmParams& params) {
  const std::size_t n = g.num_nodes();
  const std::size_t q = params.q();
  const std::size_t d = g.dim();
  const Matrix& x = g.attributes();
  const Matrix kappa = soft_group_degrees(g, beliefs);
  // fbar(r, s): belief-weighted mean of f_ls over group r.
  Matrix fbar(q, q);
  std::vector<double> mass(q, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t r = 0; r < q; ++r) {
      mass[r] += beliefs(l, r);
      for (std::size_t s = 0; s < q; ++s) fbar(r, s) += beliefs(l, r) * params.f_cache(l, s);
    }
  }
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) fbar(r, s) = mass[r] > 0.0 ? fbar(r, s) / mass[r] : 0.0;
  }
  ZetaUpdate out{params.zeta, std::vector<bool>(q, false)};
  Matrix num(q, d);
  std::vector<double> den(q, 0.0);
  std::vector<double> dist(q);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t r = 0; r < q; ++r) {
      dist[r] = distance(x.row(i), params.zeta.row(r), params.distance_kind);
      total += dist[r];
    }
    if (!(total > 0.0)) continue;
    for (std::size_t s = 0; s < q; ++s) {
      const double a = params.alpha(i, s);
      double w = 0.0;
      if (params.distance_kind == DistanceKind::squared_euclidean) {
        w = (1.0 - a) / total;
      } else if (dist[s] > 0.0) {
        w = a * (1.0 - a) / (dist[s] * dist[s]);
      }
      double spread = 0.0;
      for (std::size_t r = 0; r < q; ++r) {
        const double dev = params.f_cache(i, s) - fbar(r, s);
        spread += beliefs(i, r) * dev * dev;
      }
      const double weight = kappa(i, s) * w * spread;
      if (!(weight > 0.0)) continue;
      den[s] += weight;
      auto row = num.row(s);
      const auto xi = x.row(i);
      for (std::size_t k = 0; k < d; ++k) row[k] += weight * xi[k];
    }
  }
  for (std::size_t s = 0; s < q; ++s) {
    if (!(den[s] > 0.0)) {
      out.retained[s] = true;
      continue;
    }
    for (std::size_t k = 0; k < d; ++k) out.zeta(s, k) = num(s, k) / den[s];
  }
  return out;
}

struct BlockUpdate {
  std::vector<double> nu;
  BlockStats stats;
  Matrix omega;
  std::size_t fallbacks = 0;  // edges whose pair weights summed to zero
};

/// nu and n_r^s from beliefs, m_rs from the two-node message products with per-edge
/// normalization, omega by maximum likelihood. Diagonal blocks take half the
/// symmetric pair weight so that the m_rs over r <= s sum to the edge count.
inline BlockUpdate update_block_params(const AttributedGraph& g, const BpState& st,
                                       const Matrix& f_eff, const Matrix& omega) {
  const std::size_t q = st.q;
  BlockUpdate out;
  out.nu = mle_nu(st.beliefs);
  out.stats.m = Matrix(q, q);
  out.stats.n = Matrix(q, q);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t r = 0; r < q; ++r) {
      const double b = st.beliefs(i, r);
      for (std::size_t s = 0; s < q; ++s) out.stats.n(r, s) += b * f_eff(i, s);
    }
  }
  Matrix aleph(q, q);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t k = g.slot_begin(i); k < g.slot_end(i); ++k) {
      const NodeId j = g.target(k);
      if (j <= i) continue;
      const auto from_j = st.messages.row(k);           // psi^{j->i}
      const auto from_i = st.messages.row(g.mate(k));   // psi^{i->j}
      double z = 0.0;
      for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t s = 0; s < q; ++s) {
          aleph(r, s) = omega(r, s) * (f_eff(i, s) * f_eff(j, r) * from_i[r] * from_j[s] +
                                       f_eff(i, r) * f_eff(j, s) * from_i[s] * from_j[r]);
          z += aleph(r, s);
        }
      }
      z *= 0.5;
      if (!(z > 0.0)) {
        ++out.fallbacks;
        aleph.fill(1.0);
        z = 0.5 * static_cast<double>(q * q);
      }
      for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t s = 0; s < q; ++s) {
          out.stats.m(r, s) += aleph(r, s) / ((r == s ? 2.0 : 1.0) * z);
        }
      }
    }
  }
  out.stats.xi = exposure(out.stats.n);
  out.omega = mle_omega(out.stats);
  return out;
}

struct IterationRecord {
  Partition partition;
  Matrix beliefs;
  double modularity = 0.0;
  bool bp_converged = false;
  std::size_t bp_sweeps = 0;
  bool refit_skipped = false;  // the two lowest grids both had negative Delta
  BetaFit beta;
  Matrix omega;
  std::vector<double> nu;
  Matrix zeta;
  PopularityFunction popularity;
};

struct DetectionResult {
  std::vector<IterationRecord> iterations;
  std::size_t selected = 0;
  Partition partition;
  GammaStar gamma_star;
  double c = 0.0;
  double c_tilde = 0.0;
  bool duplicate_centers = false;
  bool bp_never_converged = false;
  double seconds = 0.0;
};

/// Initial parameters: k-means++ centers, gamma*, linear popularity, the
/// gamma*-split of omega = q c / n and a uniform prior.
inline CrsbmParams initial_params(const AttributedGraph& g, const LearnerConfig& config,
                                  const DegreeStats& ds, const GammaStar& gs,
                                  bool* duplicates = nullptr) {
  const std::size_t q = config.q;
  CrsbmParams p;
  p.degree_correction = config.degree_correction;
  p.distance_kind = config.distance_kind;
  p.zeta = init_centers(g.attributes(), q, config.seed, duplicates);
  p.popularity.mode = PopularityMode::linear_init;
  p.popularity.gamma_star = gs.gamma;
  refresh_alpha(p, g.attributes());
  const double w = static_cast<double>(q) * ds.c / static_cast<double>(g.num_nodes());
  p.omega = Matrix(q, q, w / (1.0 + gs.gamma));
  for (std::size_t r = 0; r < q; ++r) p.omega(r, r) = w * gs.gamma / (1.0 + gs.gamma);
  p.nu.assign(q, 1.0 / static_cast<double>(q));
  return p;
}

/// Alternates BP inference with parameter re-estimation for tau_max rounds and
/// keeps the round whose partition has the largest modularity.
inline DetectionResult detect(const AttributedGraph& g, const LearnerConfig& config) {
  validate(config);
  if (g.num_nodes() == 0) fail(ErrorCode::degenerate, "empty graph");
  require(g.num_nodes() >= config.q, "fewer nodes than groups");
  const auto start = std::chrono::steady_clock::now();
  DetectionResult result;
  const DegreeStats ds = degree_stats(g);
  result.c = ds.c;
  result.c_tilde = ds.c_tilde;
  result.gamma_star = solve_gamma_star(2 * config.q, ds.c_tilde, config.mu);
  CrsbmParams params = initial_params(g, config, ds, result.gamma_star, &result.duplicate_centers);

  std::optional<BpState> previous;
  bool any_converged = false;
  for (std::size_t tau = 0; tau < config.tau_max; ++tau) {
    BpConfig bpc;
    bpc.max_sweeps = config.bp_max_sweeps;
    bpc.tol = config.bp_tol;
    bpc.seed = substream(config.seed, 0x6270, tau)();
    if (config.warm_start && previous) bpc.warm = &*previous;
    BpResult bp = run_bp(g, params, bpc);
    any_converged = any_converged || bp.converged;

    IterationRecord rec;
    rec.partition = bp.partition;
    rec.beliefs = bp.beliefs;
    rec.modularity = modularity(g, bp.partition);
    rec.bp_converged = bp.converged;
    rec.bp_sweeps = bp.sweeps;

    const FSamples samples =
        update_f_samples(params.alpha, bp.beliefs, params.popularity, config.n_grids);
    const auto occupied = samples.occupied();
    rec.refit_skipped = occupied.size() >= 2 && samples.delta[occupied[0]] < 0.0 &&
                        samples.delta[occupied[1]] < 0.0;
    if (!rec.refit_skipped) {
      rec.beta = fit_beta_lsm(samples, params.popularity.gamma_star, params.popularity.beta1,
                              params.popularity.beta2);
    } else {
      rec.beta.beta1 = params.popularity.beta1;
      rec.beta.beta2 = params.popularity.beta2;
      rec.beta.kept_previous = true;
    }
    params.zeta = update_zeta(g, bp.beliefs, params).zeta;
    if (!rec.refit_skipped && !rec.beta.kept_previous) {
      params.popularity.mode = PopularityMode::sigmoid;
      params.popularity.beta1 = rec.beta.beta1;
      params.popularity.beta2 = rec.beta.beta2;
    }
    refresh_alpha(params, g.attributes());

    const Matrix f_eff = effective_popularity(g, params);
    const BlockUpdate blocks = update_block_params(g, bp.state, f_eff, params.omega);
    params.nu = blocks.nu;
    params.omega = blocks.omega;

    rec.omega = params.omega;
    rec.nu = params.nu;
    rec.zeta = params.zeta;
    rec.popularity = params.popularity;
    result.iterations.push_back(std::move(rec));
    previous = std::move(bp.state);
  }
  result.bp_never_converged = !any_converged;
  for (std::size_t t = 1; t < result.iterations.size(); ++t) {
    if (result.iterations[t].modularity > result.iterations[result.selected].modularity) {
      result.selected = t;
    }
  }
  result.partition = result.iterations[result.selected].partition;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace crsbm
