#include <gtest/gtest.h>

#include <cmath>

#include "crsbm/bp.hpp"
#include "crsbm/detectability.hpp"
#include "crsbm/metrics.hpp"
#include "crsbm/synthgen.hpp"
#include "helpers.hpp"
#include "reference_bp.hpp"

using namespace crsbm;
using crsbm::testing::error_code_of;
using crsbm::testing::plain_graph;
using crsbm::testing::ReferenceBp;

namespace {

BpModel random_model(std::size_t n, std::size_t q, std::uint64_t seed) {
  Rng rng = substream(seed, 2);
  BpModel m;
  m.f = Matrix(n, q);
  for (auto& v : m.f.values()) v = 1.0 + 2.0 * uniform01(rng);
  m.omega = Matrix(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = r; s < q; ++s) m.omega(r, s) = m.omega(s, r) = (r == s ? 0.05 : 0.01) + 0.02 * uniform01(rng);
  }
  double tot = 0;
  std::vector<double> nu(q);
  for (auto& v : nu) tot += v = 0.5 + uniform01(rng);
  for (auto& v : nu) m.log_nu.push_back(std::log(v / tot));
  return m;
}

std::vector<double> prior(const BpModel& m) {
  std::vector<double> nu;
  for (double v : m.log_nu) nu.push_back(std::exp(v));
  return nu;
}

// psi^{from -> to} in the library's per-slot layout.
std::span<const double> lib_message(const AttributedGraph& g, const BpState& st, NodeId from, NodeId to) {
  return st.messages.row(g.slot(to, from));
}

double max_message_gap(const AttributedGraph& g, const BpState& st, const ReferenceBp& ref) {
  double gap = 0.0;
  for (std::size_t k = 0; k < g.num_slots(); ++k) {
    const NodeId i = g.owner(k);
    const NodeId j = g.target(k);
    const auto a = lib_message(g, st, i, j);
    const auto& b = ref.message(i, j);
    for (std::size_t r = 0; r < a.size(); ++r) gap = std::max(gap, std::abs(a[r] - b[r]));
  }
  return gap;
}

}  // namespace

TEST(Bp, EmptyGraphIsDegenerate) {
  const auto g = plain_graph(0, {});
  const BpModel m = random_model(0, 2, 1);
  EXPECT_EQ(error_code_of([&] { init_messages(g, m, 1); }), ErrorCode::degenerate);
}

TEST(Bp, MessagesAndBeliefsStayNormalized) {
  const std::size_t n = 60;
  const auto g = plain_graph(n, crsbm::testing::random_edges(n, 150, 4));
  const auto m = random_model(n, 3, 4);
  auto st = init_messages(g, m, 9);
  for (int t = 0; t < 3; ++t) sweep(g, m, st);
  for (std::size_t k = 0; k < g.num_slots(); ++k) {
    double tot = 0;
    for (double v : st.messages.row(k)) {
      EXPECT_GE(v, 0.0);
      tot += v;
    }
    EXPECT_NEAR(tot, 1.0, 1e-12);
  }
  for (NodeId i = 0; i < n; ++i) {
    double tot = 0;
    for (double v : st.beliefs.row(i)) tot += v;
    EXPECT_NEAR(tot, 1.0, 1e-12);
  }
  EXPECT_EQ(st.fallbacks, 0u);
}

TEST(Bp, DeterministicForSeed) {
  const std::size_t n = 80;
  const auto g = plain_graph(n, crsbm::testing::random_edges(n, 200, 5));
  const auto m = random_model(n, 3, 5);
  BpConfig cfg;
  cfg.max_sweeps = 7;
  cfg.seed = 42;
  const auto a = run_bp(g, m, cfg);
  const auto b = run_bp(g, m, cfg);
  EXPECT_EQ(max_abs_difference(a.state.messages, b.state.messages), 0.0);
  EXPECT_EQ(a.partition.labels, b.partition.labels);
  cfg.seed = 43;
  EXPECT_GT(max_abs_difference(run_bp(g, m, cfg).state.messages, a.state.messages), 0.0);
}

TEST(Bp, FieldMatchesBruteForce) {
  const std::size_t n = 6;
  const auto g = plain_graph(n, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 4}});
  const auto m = random_model(n, 3, 6);
  auto st = init_messages(g, m, 1);
  // Mid-sweep state: several beliefs changed after the field was rebuilt.
  update_message(g, m, st, 1, 2);
  update_belief(g, m, st, 2);
  update_message(g, m, st, 3, 4);
  update_belief(g, m, st, 4);
  update_belief(g, m, st, 5);
  for (NodeId i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < 3; ++r) {
      double h = 0.0;
      for (NodeId l = 0; l < n; ++l) {
        for (std::size_t s = 0; s < 3; ++s) h += st.beliefs(l, s) * m.f(l, r) * m.omega(s, r) * m.f(i, s);
      }
      EXPECT_NEAR(external_field(st, m, i, r), h, 1e-12);
    }
  }
}

TEST(Bp, LeafMessageIsPriorTimesField) {
  const auto g = plain_graph(3, {{0, 1}, {1, 2}});
  const auto m = random_model(3, 2, 7);
  auto st = init_messages(g, m, 3);
  update_message(g, m, st, 0, 1);
  std::vector<double> w(2);
  for (std::size_t r = 0; r < 2; ++r) w[r] = std::exp(m.log_nu[r] - external_field(st, m, 0, r));
  const auto psi = lib_message(g, st, 0, 1);
  EXPECT_NEAR(psi[0], w[0] / (w[0] + w[1]), 1e-14);
  EXPECT_NEAR(psi[1], w[1] / (w[0] + w[1]), 1e-14);
}

TEST(Bp, MessageTimesReverseFactorIsFullProduct) {
  const std::size_t n = 40;
  const auto g = plain_graph(n, crsbm::testing::random_edges(n, 90, 8));
  const auto m = random_model(n, 3, 8);
  auto st = init_messages(g, m, 2);
  const NodeId i = 0;
  ASSERT_GT(g.degree(i), 1u);
  for (NodeId j : g.neighbors(i)) update_message(g, m, st, i, j);
  auto factor = [&](NodeId l, std::size_t r) {
    const auto in = lib_message(g, st, l, i);
    double acc = 0;
    for (std::size_t s = 0; s < 3; ++s) acc += in[s] * m.f(l, r) * m.omega(s, r) * m.f(i, s);
    return acc;
  };
  std::vector<double> full(3);
  double full_tot = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    double v = std::exp(m.log_nu[r] - external_field(st, m, i, r));
    for (NodeId l : g.neighbors(i)) v *= factor(l, r);
    full_tot += full[r] = v;
  }
  for (NodeId j : g.neighbors(i)) {
    const auto psi = lib_message(g, st, i, j);
    std::vector<double> b(3);
    double tot = 0;
    for (std::size_t r = 0; r < 3; ++r) tot += b[r] = psi[r] * factor(j, r);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(b[r] / tot, full[r] / full_tot, 1e-12);
  }
}

TEST(Bp, LazyFieldMatchesNaiveRecomputation) {
  const std::size_t n = 120;
  const auto g = plain_graph(n, crsbm::testing::random_edges(n, 300, 10));
  const auto m = random_model(n, 4, 10);
  auto st = init_messages(g, m, 77);
  ReferenceBp ref(g, m.f, m.omega, prior(m), 77, ReferenceBp::Field::naive);
  EXPECT_LT(max_abs_difference(st.beliefs, ref.beliefs()), 1e-12);
  for (int t = 0; t < 5; ++t) {
    sweep(g, m, st);
    ref.sweep();
    EXPECT_LT(max_abs_difference(st.beliefs, ref.beliefs()), 1e-8) << "sweep " << t;
    EXPECT_LT(max_message_gap(g, st, ref), 1e-8) << "sweep " << t;
  }
}

TEST(Bp, ConstantPopularityIsStandardSbm) {
  SsbmSpec spec;
  spec.n_per = 100;
  spec.epsilon = 0.2;
  spec.seed = 3;
  const auto sample = generate_ssbm(spec);
  const auto& g = sample.graph;
  const std::size_t n = g.num_nodes();
  BpModel m;
  m.f = Matrix(n, 4, 1.0);
  m.omega = Matrix(4, 4, spec.c_out() / n);
  for (std::size_t r = 0; r < 4; ++r) m.omega(r, r) = spec.c_in() / n;
  m.log_nu.assign(4, std::log(0.25));
  auto st = init_messages(g, m, 5);
  ReferenceBp ref(g, ReferenceBp::theta_table(std::vector<double>(n, 1.0), 4), m.omega,
                  std::vector<double>(4, 0.25), 5, ReferenceBp::Field::incremental);
  for (int t = 0; t < 4; ++t) {
    sweep(g, m, st);
    ref.sweep();
    EXPECT_LT(max_message_gap(g, st, ref), 1e-12) << "sweep " << t;
  }
}

TEST(Bp, FixedPointUpdateMatchesClosedFormFactors) {
  // Node 0 (category 0) with neighbours 1, 2 (category 0), 3 (category 1) and target 4.
  const std::size_t q = 4;
  const double gamma = 2.0;
  DetectabilitySpec spec;
  spec.epsilon = 0.5;
  const double wi = omega_in(spec);
  const double wo = omega_out(spec) ;
  const auto fp = fixed_point_messages(4, 2, gamma);
  const std::vector<int> cat{0, 0, 0, 1, 0};
  const auto g = plain_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  BpModel m;
  m.f = Matrix(5, q);
  for (NodeId i = 0; i < 5; ++i) {
    for (std::size_t r = 0; r < q; ++r) m.f(i, r) = static_cast<int>(r / 2) == cat[i] ? 1.0 : gamma;
  }
  m.omega = Matrix(q, q, wo * 0.01);
  for (std::size_t r = 0; r < q; ++r) m.omega(r, r) = wi * 0.01;
  m.log_nu.assign(q, std::log(0.25));
  auto st = init_messages(g, m, 1);
  for (std::size_t k = 0; k < g.num_slots(); ++k) {
    const NodeId from = g.target(k);
    auto row = st.messages.row(k);
    for (std::size_t r = 0; r < q; ++r) row[r] = static_cast<int>(r / 2) == cat[from] ? fp.in : fp.out;
  }
  refresh_derived(g, m, st);
  update_message(g, m, st, 0, 4);

  // Per-neighbour factors at the fixed point, in units of 0.01 / z.
  const double same_own = gamma * (wi + 3 * wo);          // r in category 0
  const double same_other = gamma * gamma * (wi + 3 * wo);  // r in category 1
  const double cross_own = gamma * (wi + wo + 2 * gamma * gamma * wo);
  const double cross_other = 2 * wo + gamma * gamma * (wi + wo);
  std::vector<double> w(q);
  double tot = 0;
  for (std::size_t r = 0; r < q; ++r) {
    const bool own = r < 2;
    const double prod = std::pow(own ? same_own : same_other, 2) * (own ? cross_own : cross_other);
    tot += w[r] = prod * std::exp(-external_field(st, m, 0, r));
  }
  const auto psi = lib_message(g, st, 0, 4);
  for (std::size_t r = 0; r < q; ++r) EXPECT_NEAR(psi[r], w[r] / tot, 1e-12);
  // Same-category neighbours favour the other category by gamma each, so one update
  // does not return the fixed-point ratio psi_own / psi_other = gamma.
  EXPECT_NEAR(same_other / same_own, gamma, 1e-12);
  EXPECT_GT(std::abs(psi[0] / psi[2] - gamma), 0.1);
}

TEST(Bp, SeparatedCommunitiesAreRecovered) {
  SsbmSpec spec;
  spec.n_per = 250;
  spec.epsilon = 0.0;
  spec.c = 6;
  const auto sample = generate_ssbm(spec);
  const std::size_t n = spec.n();
  CrsbmParams p;
  p.omega = Matrix(4, 4, 0.0);
  for (std::size_t r = 0; r < 4; ++r) p.omega(r, r) = spec.c_in() / n;
  p.nu.assign(4, 0.25);
  p.f_cache = Matrix(n, 4, 1.0);
  BpConfig cfg;
  cfg.max_sweeps = 200;
  const auto res = run_bp(sample.graph, p, cfg);
  EXPECT_TRUE(res.converged);
  // Isolated nodes and small components carry no signal; score the giant part.
  std::vector<std::uint32_t> det;
  std::vector<std::uint32_t> truth;
  for (NodeId i = 0; i < n; ++i) {
    if (sample.graph.degree(i) < 2) continue;
    det.push_back(res.partition.labels[i]);
    truth.push_back(sample.truth.labels[i]);
  }
  EXPECT_GT(nmi(Partition(det, 4), Partition(truth, 4)), 0.97);
}

TEST(Bp, ArgmaxTies) {
  Matrix b(2, 3);
  b(0, 0) = 0.3;
  b(0, 1) = 0.3 + 1e-9;
  b(0, 2) = 0.4 - 1e-9;
  b(1, 0) = b(1, 1) = b(1, 2) = 1.0 / 3;
  EXPECT_EQ(argmax_partition(b).labels, (std::vector<std::uint32_t>{2, 0}));
  b(0, 2) = 0.3;
  EXPECT_EQ(argmax_partition(b).labels[0], 1u);
  EXPECT_EQ(argmax_partition(b, 1e-6).labels[0], 0u);
}
