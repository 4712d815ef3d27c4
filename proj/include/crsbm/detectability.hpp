#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "crsbm/error.hpp"

namespace crsbm {

/// Nested symmetric planted partition: q_star communities, q_b brothers per
/// category, popularity ratio gamma = f(1) / f(0), excess degree c_tilde and
/// strength ratio epsilon = c_out / c_in. Rates are in units of c_in / n.
struct DetectabilitySpec {
  std::size_t q_star = 4;
  std::size_t q_b = 2;
  double gamma = 2.0;
  double c_tilde = 4.0;
  double epsilon = 0.5;

  std::size_t q_tilde() const { return q_star / q_b; }
};

inline void validate(const DetectabilitySpec& s) {
  require(s.q_b >= 1 && s.q_star >= s.q_b && s.q_star % s.q_b == 0,
          "q_b must divide q_star");
  require(s.gamma >= 1.0, "gamma must be at least 1");
  require(s.epsilon >= 0.0 && s.epsilon <= 1.0, "epsilon must lie in [0, 1]");
}

struct FixedPoint {
  double in;   // groups of the node's own category
  double out;  // all other groups
};

inline FixedPoint fixed_point_messages(std::size_t q_star, std::size_t q_b, double gamma) {
  const double z = static_cast<double>(q_b) * gamma + static_cast<double>(q_star - q_b);
  return {gamma / z, 1.0 / z};
}

/// Average off-diagonal MLE rate relative to c_out / n.
inline double eta(std::size_t q_star, std::size_t q_b, double gamma) {
  const double qs = static_cast<double>(q_star);
  const double qb = static_cast<double>(q_b);
  return (qb - 1.0 + (qs - qb) / (gamma * gamma)) / (qs - 1.0);
}

inline double omega_in(const DetectabilitySpec&) { return 1.0; }
inline double omega_out(const DetectabilitySpec& s) {
  return s.epsilon * eta(s.q_star, s.q_b, s.gamma);
}

/// T = (I - psi 1^T) D^-1 Psi Omega F at the fixed point, for a node in community
/// `reference`. F is 1 on the node's own category and gamma elsewhere.
inline Eigen::MatrixXd transfer_matrix(const DetectabilitySpec& s, std::size_t reference = 0) {
  validate(s);
  require(reference < s.q_star, "reference community out of range");
  const auto q = static_cast<Eigen::Index>(s.q_star);
  const FixedPoint fp = fixed_point_messages(s.q_star, s.q_b, s.gamma);
  const std::size_t own = reference / s.q_b;
  Eigen::VectorXd psi(q);
  Eigen::VectorXd f(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    const bool same = static_cast<std::size_t>(r) / s.q_b == own;
    psi(r) = same ? fp.in : fp.out;
    f(r) = same ? 1.0 : s.gamma;
  }
  Eigen::MatrixXd omega = Eigen::MatrixXd::Constant(q, q, omega_out(s));
  omega.diagonal().setConstant(omega_in(s));
  const Eigen::MatrixXd m = psi.asDiagonal() * omega * f.asDiagonal();
  const Eigen::VectorXd row_sums = m.rowwise().sum();
  if ((row_sums.array() <= 0.0).any()) fail(ErrorCode::degenerate, "singular row-sum matrix");
  const Eigen::MatrixXd t_tilde = row_sums.cwiseInverse().asDiagonal() * m;
  const Eigen::MatrixXd proj =
      Eigen::MatrixXd::Identity(q, q) - psi * Eigen::RowVectorXd::Ones(q);
  return proj * t_tilde;
}

inline std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& t) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(t, false);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

inline double lambda1_closed_form(std::size_t q_star, std::size_t q_b, double gamma, double w_in,
                                  double w_out) {
  const double qs = static_cast<double>(q_star);
  const double qb = static_cast<double>(q_b);
  return (w_in - w_out) / (w_in + (qs - 1.0 - qb) * w_out + qb / gamma * w_out);
}

inline double lambda1_closed_form(const DetectabilitySpec& s) {
  return lambda1_closed_form(s.q_star, s.q_b, s.gamma, omega_in(s), omega_out(s));
}

/// Eigenvalue of the modes that distinguish brothers inside one category, with
/// multiplicity q_b - 1.
inline double brother_mode_eigenvalue(const DetectabilitySpec& s) {
  const double qs = static_cast<double>(s.q_star);
  const double qb = static_cast<double>(s.q_b);
  const double wi = omega_in(s);
  const double wo = omega_out(s);
  return (wi - wo) / (wi + (qb - 1.0) * wo + (qs - qb) * s.gamma * wo);
}

/// Leading eigenvalue when every node's attribute names its own community.
inline double lambda1_indicative(std::size_t q, double gamma, double epsilon) {
  const double g2 = gamma * gamma;
  return (g2 - epsilon) / (g2 + (static_cast<double>(q) - 2.0 + gamma) * epsilon);
}

/// d lambda1_indicative / d gamma.
inline double lambda1_indicative_derivative(std::size_t q, double gamma, double epsilon) {
  const double qd = static_cast<double>(q);
  const double denom = epsilon * (qd - 2.0 + gamma) + gamma * gamma;
  return epsilon * (epsilon + gamma * (2.0 * qd - 2.0 + gamma)) / (denom * denom);
}

/// Critical strength ratio below which brother communities are detectable. With a
/// single category (q_b = q_star) the plain planted-partition value is returned.
inline double threshold_epsilon(std::size_t q_star, std::size_t q_b, double gamma,
                                double c_tilde) {
  require(c_tilde > 1.0, "threshold needs c_tilde > 1");
  require(gamma >= 1.0, "gamma must be at least 1");
  const double root = std::sqrt(c_tilde);
  const double qs = static_cast<double>(q_star);
  if (q_b >= q_star) return (root - 1.0) / (qs + root - 1.0);
  const double qb = static_cast<double>(q_b);
  return (root - 1.0) / (eta(q_star, q_b, gamma) * (qs - qb + qb / gamma + root - 1.0));
}

/// Kesten-Stigum test, strict.
inline bool ks_detectable(double c_tilde, double lambda1) {
  return c_tilde * lambda1 * lambda1 > 1.0;
}

}  // namespace crsbm
