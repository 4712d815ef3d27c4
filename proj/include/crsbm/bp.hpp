#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/graph.hpp"
#include "crsbm/matrix.hpp"
#include "crsbm/model.hpp"
#include "crsbm/random.hpp"

namespace crsbm {

/// The three inputs BP reads: effective popularity F (n x q), block rates and log prior.
struct BpModel {
  Matrix f;
  Matrix omega;
  std::vector<double> log_nu;

  std::size_t q() const { return omega.rows(); }
};

inline BpModel make_bp_model(const AttributedGraph& g, const CrsbmParams& params) {
  BpModel m;
  m.f = effective_popularity(g, params);
  m.omega = params.omega;
  m.log_nu.resize(params.nu.size());
  for (std::size_t r = 0; r < params.nu.size(); ++r) {
    m.log_nu[r] = params.nu[r] > 0.0 ? std::log(params.nu[r])
                                     : -std::numeric_limits<double>::infinity();
  }
  return m;
}

/// Messages are stored per slot: the row of slot k (owner i, target l) holds the
/// incoming message psi^{l->i}. The outgoing psi^{i->l} therefore lives at mate(k).
///
/// For every slot the log of its factor in the owner's product is cached, and each
/// node keeps the sum of its finite factors plus a count of zero factors, so a
/// cavity product costs O(q) regardless of degree.
struct BpState {
  std::size_t q = 0;
  Matrix messages;
  Matrix log_terms;
  Matrix log_sum;
  std::vector<std::uint32_t> zero_count;  // n x q, row-major
  Matrix beliefs;
  Matrix field_base;
  Matrix delta;
  Rng rng;
  bool converged = false;
  std::size_t sweep_count = 0;
  std::size_t fallbacks = 0;
  std::vector<double> trace;  // max message change per sweep
  std::vector<double> scratch;
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Exponentiates and normalizes a log-weight row in place. An all -inf row becomes
/// uniform and returns false.
inline bool normalize_log_row(std::span<double> row) {
  const double top = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(top)) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    return false;
  }
  double total = 0.0;
  for (auto& v : row) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : row) v /= total;
  return true;
}

/// log( F_lr * sum_s psi_s^{l->i} omega_sr F_is ) for the message stored at slot k.
inline void compute_log_term(const AttributedGraph& g, const BpModel& model, BpState& st,
                             std::size_t k) {
  const NodeId i = g.owner(k);
  const NodeId l = g.target(k);
  const std::size_t q = st.q;
  const auto psi = st.messages.row(k);
  auto out = st.log_terms.row(k);
  for (std::size_t r = 0; r < q; ++r) {
    double acc = 0.0;
    for (std::size_t s = 0; s < q; ++s) acc += psi[s] * model.omega(s, r) * model.f(i, s);
    const double v = model.f(l, r) * acc;
    out[r] = v > 0.0 ? std::log(v) : kNegInf;
  }
}

inline void rebuild_node_sum(const AttributedGraph& g, BpState& st, NodeId i) {
  const std::size_t q = st.q;
  auto sum = st.log_sum.row(i);
  std::fill(sum.begin(), sum.end(), 0.0);
  std::uint32_t* zeros = st.zero_count.data() + static_cast<std::size_t>(i) * q;
  std::fill(zeros, zeros + q, 0u);
  for (std::size_t k = g.slot_begin(i); k < g.slot_end(i); ++k) {
    const auto t = st.log_terms.row(k);
    for (std::size_t r = 0; r < q; ++r) {
      if (t[r] == kNegInf) {
        ++zeros[r];
      } else {
        sum[r] += t[r];
      }
    }
  }
}

/// Swaps the cached factor of slot k for a freshly computed one.
inline void replace_log_term(const AttributedGraph& g, const BpModel& model, BpState& st,
                             std::size_t k) {
  const NodeId i = g.owner(k);
  const std::size_t q = st.q;
  auto sum = st.log_sum.row(i);
  std::uint32_t* zeros = st.zero_count.data() + static_cast<std::size_t>(i) * q;
  auto t = st.log_terms.row(k);
  for (std::size_t r = 0; r < q; ++r) {
    if (t[r] == kNegInf) {
      --zeros[r];
    } else {
      sum[r] -= t[r];
    }
  }
  compute_log_term(g, model, st, k);
  for (std::size_t r = 0; r < q; ++r) {
    if (t[r] == kNegInf) {
      ++zeros[r];
    } else {
      sum[r] += t[r];
    }
  }
}

}  // namespace detail

/// Recomputes the stored field h_r^i = sum_s F_is omega_sr A_sr for all nodes, with
/// A_sr = sum_l psi_s^l F_lr, and clears the accumulator.
inline void reset_field(const BpModel& model, BpState& st) {
  const std::size_t q = st.q;
  const std::size_t n = st.beliefs.rows();
  Matrix a(q, q);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t s = 0; s < q; ++s) {
      const double b = st.beliefs(l, s);
      for (std::size_t r = 0; r < q; ++r) a(s, r) += b * model.f(l, r);
    }
  }
  Matrix wa(q, q);
  for (std::size_t s = 0; s < q; ++s) {
    for (std::size_t r = 0; r < q; ++r) wa(s, r) = model.omega(s, r) * a(s, r);
  }
  st.field_base = Matrix(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < q; ++r) {
      double h = 0.0;
      for (std::size_t s = 0; s < q; ++s) h += model.f(i, s) * wa(s, r);
      st.field_base(i, r) = h;
    }
  }
  st.delta = Matrix(q, q);
}

/// Current field of node i for group r: stored base plus the lazy correction.
inline double external_field(const BpState& st, const BpModel& model, NodeId i, std::size_t r) {
  double h = st.field_base(i, r);
  for (std::size_t s = 0; s < st.q; ++s) h += model.f(i, s) * st.delta(s, r);
  return h;
}

/// Belief of j from its cached product; folds the change into the accumulator.
inline std::span<const double> update_belief(const AttributedGraph& g, const BpModel& model,
                                             BpState& st, NodeId j) {
  (void)g;
  const std::size_t q = st.q;
  std::vector<double>& next = st.scratch;
  next.resize(q);
  const std::uint32_t* zeros = st.zero_count.data() + static_cast<std::size_t>(j) * q;
  for (std::size_t r = 0; r < q; ++r) {
    next[r] = zeros[r] > 0 ? detail::kNegInf
                           : model.log_nu[r] - external_field(st, model, j, r) + st.log_sum(j, r);
  }
  if (!detail::normalize_log_row(next)) ++st.fallbacks;
  auto row = st.beliefs.row(j);
  for (std::size_t r = 0; r < q; ++r) {
    const double change = next[r] - row[r];
    if (change != 0.0) {
      for (std::size_t s = 0; s < q; ++s) st.delta(r, s) += change * model.f(j, s) * model.omega(r, s);
    }
    row[r] = next[r];
  }
  return row;
}

/// Recomputes psi^{i->j} where slot k is j's entry in i's range. Returns the L-inf
/// change of the message.
inline double update_message(const AttributedGraph& g, const BpModel& model, BpState& st,
                             std::size_t k) {
  const std::size_t q = st.q;
  const NodeId i = g.owner(k);
  const std::size_t out = g.mate(k);
  const std::uint32_t* zeros = st.zero_count.data() + static_cast<std::size_t>(i) * q;
  const auto excluded = st.log_terms.row(k);
  std::vector<double>& next = st.scratch;
  next.resize(q);
  for (std::size_t r = 0; r < q; ++r) {
    const bool excluded_zero = excluded[r] == detail::kNegInf;
    const std::uint32_t remaining = zeros[r] - (excluded_zero ? 1u : 0u);
    if (remaining > 0) {
      next[r] = detail::kNegInf;
      continue;
    }
    const double cavity = excluded_zero ? st.log_sum(i, r) : st.log_sum(i, r) - excluded[r];
    next[r] = model.log_nu[r] - external_field(st, model, i, r) + cavity;
  }
  if (!detail::normalize_log_row(next)) ++st.fallbacks;
  auto row = st.messages.row(out);
  double change = 0.0;
  for (std::size_t r = 0; r < q; ++r) {
    change = std::max(change, std::abs(next[r] - row[r]));
    row[r] = next[r];
  }
  detail::replace_log_term(g, model, st, out);
  return change;
}

inline double update_message(const AttributedGraph& g, const BpModel& model, BpState& st,
                             NodeId i, NodeId j) {
  return update_message(g, model, st, g.slot(i, j));
}

/// Rebuilds cached factors, products, beliefs and fields from the current messages.
/// Beliefs are first formed without the field, then all at once under the field of
/// that first pass, and the field is rebuilt from the result.
inline void refresh_derived(const AttributedGraph& g, const BpModel& model, BpState& st) {
  const std::size_t n = g.num_nodes();
  const std::size_t q = st.q;
  st.log_terms = Matrix(g.num_slots(), q);
  st.log_sum = Matrix(n, q);
  st.zero_count.assign(n * q, 0);
  for (std::size_t k = 0; k < g.num_slots(); ++k) detail::compute_log_term(g, model, st, k);
  for (NodeId i = 0; i < n; ++i) detail::rebuild_node_sum(g, st, i);
  st.beliefs = Matrix(n, q);
  st.field_base = Matrix(n, q);
  st.delta = Matrix(q, q);
  Matrix next(n, q);
  for (int pass = 0; pass < 2; ++pass) {
    for (NodeId i = 0; i < n; ++i) {
      const std::uint32_t* zeros = st.zero_count.data() + static_cast<std::size_t>(i) * q;
      auto row = next.row(i);
      for (std::size_t r = 0; r < q; ++r) {
        row[r] = zeros[r] > 0 ? detail::kNegInf
                              : model.log_nu[r] - st.field_base(i, r) + st.log_sum(i, r);
      }
      if (!detail::normalize_log_row(row)) ++st.fallbacks;
    }
    st.beliefs = next;
    reset_field(model, st);
  }
}

/// Random messages, one uniform draw per entry in slot order, normalized.
inline BpState init_messages(const AttributedGraph& g, const BpModel& model, std::uint64_t seed) {
  if (g.num_nodes() == 0) fail(ErrorCode::degenerate, "empty graph");
  const std::size_t q = model.q();
  require(q >= 2, "BP needs at least two groups");
  require(model.f.rows() == g.num_nodes() && model.f.cols() == q, "popularity table shape mismatch");
  require(model.log_nu.size() == q, "prior length differs from q");
  BpState st;
  st.q = q;
  st.rng = Rng(seed);
  st.messages = Matrix(g.num_slots(), q);
  for (std::size_t k = 0; k < g.num_slots(); ++k) {
    auto row = st.messages.row(k);
    double total = 0.0;
    for (auto& v : row) {
      v = uniform01(st.rng);
      total += v;
    }
    if (total > 0.0) {
      for (auto& v : row) v /= total;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(q));
    }
  }
  refresh_derived(g, model, st);
  return st;
}

/// Continues from another run's messages under a (possibly different) model.
inline BpState warm_start(const AttributedGraph& g, const BpModel& model, const BpState& previous,
                          std::uint64_t seed) {
  require(previous.q == model.q() && previous.messages.rows() == g.num_slots(),
          "warm-start state does not match the graph");
  BpState st;
  st.q = previous.q;
  st.rng = Rng(seed);
  st.messages = previous.messages;
  refresh_derived(g, model, st);
  return st;
}

/// Fresh random visiting order over all directed edges (slots).
inline std::vector<std::size_t> sweep_order(std::size_t slots, Rng& rng) {
  std::vector<std::size_t> order(slots);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  return order;
}

/// One asynchronous sweep. Each visited slot k (owner i, target j) refreshes
/// psi^{i->j} and then the belief of j. Nodes without edges are refreshed at the end.
/// Returns the largest message change.
inline double sweep(const AttributedGraph& g, const BpModel& model, BpState& st) {
  for (NodeId i = 0; i < g.num_nodes(); ++i) detail::rebuild_node_sum(g, st, i);
  reset_field(model, st);
  const auto order = sweep_order(g.num_slots(), st.rng);
  double worst = 0.0;
  for (const std::size_t k : order) {
    worst = std::max(worst, update_message(g, model, st, k));
    update_belief(g, model, st, g.target(k));
  }
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (g.degree(i) == 0) update_belief(g, model, st, i);
  }
  ++st.sweep_count;
  st.trace.push_back(worst);
  return worst;
}

/// Hard assignment by largest belief. Ties, up to `tie_tolerance`, go to the lowest group index.
inline Partition argmax_partition(const Matrix& beliefs, double tie_tolerance = 0.0) {
  std::vector<std::uint32_t> labels(beliefs.rows());
  for (std::size_t i = 0; i < beliefs.rows(); ++i) {
    const auto row = beliefs.row(i);
    std::size_t best = 0;
    for (std::size_t r = 1; r < row.size(); ++r)
      if (row[r] > row[best] + tie_tolerance) best = r;
    labels[i] = static_cast<std::uint32_t>(best);
  }
  return Partition(std::move(labels), beliefs.cols());
}

struct BpConfig {
  std::size_t max_sweeps = 100;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  /// Messages to continue from instead of a random start.
  const BpState* warm = nullptr;
  /// Called after every sweep.
  std::function<void(const BpState&)> observer;
};

struct BpResult {
  Matrix beliefs;
  Partition partition;
  bool converged = false;
  std::size_t sweeps = 0;
  BpState state;
};

inline BpResult run_bp(const AttributedGraph& g, const BpModel& model, const BpConfig& config) {
  BpState st = config.warm ? warm_start(g, model, *config.warm, config.seed)
                           : init_messages(g, model, config.seed);
  while (st.sweep_count < config.max_sweeps) {
    const double change = sweep(g, model, st);
    if (config.observer) config.observer(st);
    if (change < config.tol) {
      st.converged = true;
      break;
    }
  }
  BpResult out;
  out.beliefs = st.beliefs;
  out.partition = argmax_partition(st.beliefs, config.tol);
  out.converged = st.converged;
  out.sweeps = st.sweep_count;
  out.state = std::move(st);
  return out;
}

inline BpResult run_bp(const AttributedGraph& g, const CrsbmParams& params,
                       const BpConfig& config) {
  return run_bp(g, make_bp_model(g, params), config);
}

}  // namespace crsbm
