#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/matrix.hpp"
#include "crsbm/random.hpp"

namespace crsbm {

/// Symmetric planted partition with q_star equal communities grouped into q_tilde
/// categories of q_star / q_tilde brother communities each.
struct SsbmSpec {
  std::size_t q_star = 4;
  std::size_t q_tilde = 2;
  std::size_t n_per = 1000;
  double c = 4.0;
  double epsilon = 0.5;
  std::uint64_t seed = 1;

  std::size_t n() const { return q_star * n_per; }
  std::size_t q_b() const { return q_star / q_tilde; }
  double c_in() const { return static_cast<double>(q_star) * c / (1.0 + (q_star - 1.0) * epsilon); }
  double c_out() const { return epsilon * c_in(); }
};

inline void validate(const SsbmSpec& s) {
  require(s.q_star >= 1 && s.q_tilde >= 1, "q_star and q_tilde must be positive");
  require(s.q_star % s.q_tilde == 0, "q_tilde must divide q_star");
  require(s.n_per >= 1, "n_per must be at least 1");
  require(s.c > 0.0, "mean degree c must be positive");
  require(s.epsilon >= 0.0 && s.epsilon <= 1.0, "epsilon must lie in [0, 1]");
}

struct SsbmSample {
  AttributedGraph graph;
  GroundTruth truth;
  /// Realized n * (edge density) within and between communities.
  double realized_c_in = 0.0;
  double realized_c_out = 0.0;
  std::size_t intra_edges = 0;
  std::size_t inter_edges = 0;
};

/// Community of node i is i / n_per; its category is community / q_b, written
/// as a one-hot attribute row of width q_tilde.
inline SsbmSample generate_ssbm(const SsbmSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n();
  const std::size_t per = spec.n_per;
  const double nn = static_cast<double>(n);
  const double p_in = spec.c_in() / nn;
  const double p_out = spec.c_out() / nn;
  if (p_in > 1.0 || p_out > 1.0) {
    fail(ErrorCode::invalid_argument, "edge probability exceeds 1: c is too large for n = " +
                                          std::to_string(n));
  }

  std::vector<Edge> edges;
  std::size_t intra = 0;
  std::size_t inter = 0;
  for (std::size_t r = 0; r < spec.q_star; ++r) {
    for (std::size_t s = r; s < spec.q_star; ++s) {
      const double p = r == s ? p_in : p_out;
      const std::uint64_t pairs = r == s ? static_cast<std::uint64_t>(per) * (per - 1) / 2
                                         : static_cast<std::uint64_t>(per) * per;
      if (pairs == 0 || p <= 0.0) continue;
      Rng rng = substream(spec.seed, r, s);
      std::binomial_distribution<std::uint64_t> count_dist(pairs, p);
      const std::uint64_t count = count_dist(rng);

      // Distinct pairs by rejection; past half the block, draw the complement.
      const bool complement = count > pairs / 2;
      const std::uint64_t draws = complement ? pairs - count : count;
      std::unordered_set<std::uint64_t> picked;
      picked.reserve(draws * 2);
      while (picked.size() < draws) {
        std::uint64_t a = uniform_index(rng, per);
        std::uint64_t b = uniform_index(rng, per);
        if (r == s) {
          if (a == b) continue;
          if (a > b) std::swap(a, b);
        }
        picked.insert(a * per + b);
      }
      auto emit = [&](std::uint64_t key) {
        const auto a = static_cast<NodeId>(r * per + key / per);
        const auto b = static_cast<NodeId>(s * per + key % per);
        edges.emplace_back(a, b);
      };
      if (!complement) {
        std::vector<std::uint64_t> keys(picked.begin(), picked.end());
        std::sort(keys.begin(), keys.end());
        for (auto key : keys) emit(key);
      } else {
        for (std::uint64_t a = 0; a < per; ++a) {
          for (std::uint64_t b = (r == s ? a + 1 : 0); b < per; ++b) {
            if (!picked.count(a * per + b)) emit(a * per + b);
          }
        }
      }
      (r == s ? intra : inter) += count;
    }
  }

  Matrix x(n, spec.q_tilde, 0.0);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t z = i / per;
    labels[i] = static_cast<std::uint32_t>(z);
    x(i, z / spec.q_b()) = 1.0;
  }

  SsbmSample out;
  out.graph = AttributedGraph::from_edges(n, edges, std::move(x));
  out.truth = Partition(std::move(labels), spec.q_star);
  out.intra_edges = intra;
  out.inter_edges = inter;
  const double q = static_cast<double>(spec.q_star);
  const double per_d = static_cast<double>(per);
  const double intra_pairs = q * per_d * (per_d - 1.0) / 2.0;
  const double inter_pairs = q * (q - 1.0) / 2.0 * per_d * per_d;
  out.realized_c_in = intra_pairs > 0 ? nn * static_cast<double>(intra) / intra_pairs : 0.0;
  out.realized_c_out = inter_pairs > 0 ? nn * static_cast<double>(inter) / inter_pairs : 0.0;
  return out;
}

}  // namespace crsbm
