#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "crsbm/bp.hpp"
#include "crsbm/detectability.hpp"
#include "crsbm/metrics.hpp"
#include "crsbm/model.hpp"
#include "crsbm/random.hpp"
#include "crsbm/synthgen.hpp"

namespace crsbm {

/// Fixed-popularity parameters for a nested planted partition: f = 1 toward groups
/// of the node's own category and gamma elsewhere, omega_in = c_in / n, omega_out
/// the averaged MLE c_out eta / n, uniform prior.
inline CrsbmParams planted_nested_params(const SsbmSpec& spec, double gamma) {
  const std::size_t n = spec.n();
  const std::size_t q = spec.q_star;
  const std::size_t qb = spec.q_b();
  const double nn = static_cast<double>(n);
  CrsbmParams p;
  p.popularity.mode = PopularityMode::constant_one;
  p.popularity.gamma_star = gamma;
  p.omega = Matrix(q, q, spec.c_out() * eta(q, qb, gamma) / nn);
  for (std::size_t r = 0; r < q; ++r) p.omega(r, r) = spec.c_in() / nn;
  p.nu.assign(q, 1.0 / static_cast<double>(q));
  p.alpha = Matrix(n, q, 1.0);
  p.f_cache = Matrix(n, q, gamma);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t category = i / spec.n_per / qb;
    for (std::size_t r = category * qb; r < (category + 1) * qb; ++r) {
      p.alpha(i, r) = 0.0;
      p.f_cache(i, r) = 1.0;
    }
  }
  return p;
}

struct Table2Outcome {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  Matrix confusion;  // normalized by n_per, columns reordered within categories
  std::vector<std::size_t> column_order;
  std::vector<bool> category_merged;
  bool all_diagonals_split = false;
  std::string verdict;  // "merged", "split" or "mixed"
  bool converged = false;
  std::size_t sweeps = 0;
  double seconds = 0.0;
};

inline constexpr double kMergeShare = 0.02;
inline constexpr double kSplitDiagonal = 0.03;

/// Classifies a confusion matrix whose rows are planted communities. Detected
/// groups are tied to categories by the fixed popularity, so brothers are matched
/// only among the columns of their own category.
inline Table2Outcome classify_nested(const ConfusionMatrix& cm, std::size_t q_b, double n_per) {
  const std::size_t q = cm.counts.rows();
  Table2Outcome out;
  out.column_order.resize(q);
  const std::size_t categories = q / q_b;
  for (std::size_t cat = 0; cat < categories; ++cat) {
    const std::size_t base = cat * q_b;
    Matrix block(q_b, q_b);
    double category_nodes = 0.0;
    std::vector<double> column_mass(q_b, 0.0);
    for (std::size_t a = 0; a < q_b; ++a) {
      category_nodes += cm.row_totals[base + a];
      for (std::size_t b = 0; b < q_b; ++b) {
        block(a, b) = cm.counts(base + a, base + b);
        column_mass[b] += block(a, b);
      }
    }
    const auto match = max_weight_assignment(block);
    for (std::size_t a = 0; a < q_b; ++a) out.column_order[base + a] = base + match[a];
    std::size_t holding = 0;
    for (double mass : column_mass) {
      if (mass >= kMergeShare * category_nodes) ++holding;
    }
    out.category_merged.push_back(holding == 1);
  }
  out.confusion = Matrix(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t k = 0; k < q; ++k) out.confusion(r, k) = cm.counts(r, out.column_order[k]) / n_per;
  }
  out.all_diagonals_split = true;
  for (std::size_t r = 0; r < q; ++r) {
    out.all_diagonals_split = out.all_diagonals_split && out.confusion(r, r) >= kSplitDiagonal;
  }
  const bool merged = std::all_of(out.category_merged.begin(), out.category_merged.end(),
                                  [](bool b) { return b; });
  out.verdict = merged ? "merged" : (out.all_diagonals_split ? "split" : "mixed");
  return out;
}

struct Table2Config {
  std::size_t q_star = 4;
  std::size_t q_tilde = 2;
  std::size_t n_per = 5000;
  double c = 4.0;
  double gamma = 2.0;
  std::size_t max_sweeps = 1000;
  double tol = 1e-6;
};

/// One BP-only run on a freshly generated nested graph.
inline Table2Outcome run_table2_case(double epsilon, std::uint64_t seed,
                                     const Table2Config& cfg = {}) {
  const auto start = std::chrono::steady_clock::now();
  SsbmSpec spec{cfg.q_star, cfg.q_tilde, cfg.n_per, cfg.c, epsilon, seed};
  const SsbmSample sample = generate_ssbm(spec);
  const CrsbmParams params = planted_nested_params(spec, cfg.gamma);
  BpConfig bpc;
  bpc.max_sweeps = cfg.max_sweeps;
  bpc.tol = cfg.tol;
  bpc.seed = substream(seed, 0x7432, 0)();
  const BpResult bp = run_bp(sample.graph, params, bpc);
  const ConfusionMatrix cm = confusion(bp.partition, sample.truth);
  Table2Outcome out = classify_nested(cm, spec.q_b(), static_cast<double>(cfg.n_per));
  out.epsilon = epsilon;
  out.seed = seed;
  out.converged = bp.converged;
  out.sweeps = bp.sweeps;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// The three published settings with the pattern each is expected to show.
struct Table2Setting {
  double epsilon;
  const char* label;
  const char* expected;
};

inline std::vector<Table2Setting> table2_settings() {
  return {{4.0 / 7.0, "4/7", "merged"}, {0.5, "1/2", "merged"}, {11.0 / 24.0, "11/24", "split"}};
}

/// Most frequent verdict; ties resolve to the earliest run's verdict.
inline std::string majority_verdict(const std::vector<Table2Outcome>& runs) {
  std::string best;
  std::size_t best_count = 0;
  for (const auto& r : runs) {
    const auto count = static_cast<std::size_t>(std::count_if(
        runs.begin(), runs.end(), [&](const auto& o) { return o.verdict == r.verdict; }));
    if (count > best_count) {
      best = r.verdict;
      best_count = count;
    }
  }
  return best;
}

}  // namespace crsbm
