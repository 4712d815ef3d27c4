#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crsbm/detectability.hpp"
#include "helpers.hpp"

using namespace crsbm;

namespace {

std::vector<double> real_parts(const std::vector<std::complex<double>>& ev, double* max_imag) {
  std::vector<double> out;
  *max_imag = 0.0;
  for (auto z : ev) {
    out.push_back(z.real());
    *max_imag = std::max(*max_imag, std::abs(z.imag()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool contains(const std::vector<double>& v, double x, double tol) {
  return std::any_of(v.begin(), v.end(), [&](double y) { return std::abs(y - x) < tol; });
}

// Bisection on c_tilde * lambda1(eps)^2 = 1 over eps, lambda1 from the closed form.
double threshold_by_bisection(std::size_t q_star, std::size_t q_b, double gamma, double c_tilde) {
  auto g = [&](double eps) {
    DetectabilitySpec s{q_star, q_b, gamma, c_tilde, eps};
    const double l = lambda1_closed_form(s);
    return c_tilde * l * l - 1.0;
  };
  double lo = 0.0;
  double hi = 1.0 / eta(q_star, q_b, gamma);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Detectability, FixedPointMessages) {
  const auto fp = fixed_point_messages(4, 2, 2.0);
  EXPECT_DOUBLE_EQ(fp.in, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(fp.out, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(2 * fp.in + 2 * fp.out, 1.0);
}

TEST(Detectability, EtaAtGammaOne) {
  EXPECT_DOUBLE_EQ(eta(4, 2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(eta(4, 2, 2.0), (1.0 + 0.5) / 3.0);
}

TEST(Detectability, TransferMatrixStructure) {
  for (double gamma : {1.0, 1.7, 3.0}) {
    for (double eps : {0.1, 0.5, 0.9}) {
      DetectabilitySpec s{6, 3, gamma, 4.0, eps};
      const auto t = transfer_matrix(s);
      // Projection removes the component along the fixed point: columns sum to 0.
      for (Eigen::Index c = 0; c < t.cols(); ++c) EXPECT_NEAR(t.col(c).sum(), 0.0, 1e-13);
      double imag = 0;
      const auto ev = real_parts(eigenvalues(t), &imag);
      EXPECT_LT(imag, 1e-9);
      EXPECT_TRUE(contains(ev, lambda1_closed_form(s), 1e-9));
      EXPECT_TRUE(contains(ev, brother_mode_eigenvalue(s), 1e-9));
      EXPECT_TRUE(contains(ev, 0.0, 1e-9));
      // Spectrum does not depend on which community the node sits in.
      double imag2 = 0;
      const auto other = real_parts(eigenvalues(transfer_matrix(s, 4)), &imag2);
      for (std::size_t k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev[k], other[k], 1e-9);
    }
  }
}

TEST(Detectability, PlainPlantedPartitionEigenvalue) {
  // gamma = 1 and one category: lambda = (w_in - w_out) / (w_in + (q - 1) w_out).
  DetectabilitySpec s{4, 4, 1.0, 4.0, 0.5};
  double imag = 0;
  const auto ev = real_parts(eigenvalues(transfer_matrix(s)), &imag);
  EXPECT_NEAR(ev.back(), 0.5 / 2.5, 1e-12);
  s.epsilon = 1.0 / 3.0;
  EXPECT_NEAR(real_parts(eigenvalues(transfer_matrix(s)), &imag).back(), (2.0 / 3) / 2.0, 1e-12);
}

TEST(Detectability, TableSpecClosedFormIsLeading) {
  DetectabilitySpec s{4, 2, 2.0, 4.0, 11.0 / 24.0};
  double imag = 0;
  const auto ev = real_parts(eigenvalues(transfer_matrix(s)), &imag);
  EXPECT_NEAR(ev.back(), lambda1_closed_form(s), 1e-12);
  EXPECT_NEAR(lambda1_closed_form(s), 0.528571428571, 1e-9);
  EXPECT_NEAR(brother_mode_eigenvalue(s), 0.359223300971, 1e-9);
  double trace = 0;
  for (double v : ev) trace += v;
  EXPECT_NEAR(trace, transfer_matrix(s).trace(), 1e-12);
}

TEST(Detectability, IndicativeEigenvalue) {
  EXPECT_NEAR(lambda1_indicative(4, 2.0, 0.5), 3.5 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(lambda1_indicative(4, 1.0, 0.5), 0.5 / 2.5);
  for (double g : {1.0, 1.5, 3.0}) {
    for (double e : {0.1, 0.6}) {
      const double h = 1e-6;
      const double fd = (lambda1_indicative(5, g + h, e) - lambda1_indicative(5, g - h, e)) / (2 * h);
      EXPECT_NEAR(lambda1_indicative_derivative(5, g, e), fd, 1e-8);
      EXPECT_GT(lambda1_indicative_derivative(5, g, e), 0.0);
    }
  }
}

TEST(Detectability, ThresholdValues) {
  EXPECT_DOUBLE_EQ(threshold_epsilon(4, 2, 2.0, 4.0), 0.5);
  EXPECT_DOUBLE_EQ(threshold_epsilon(4, 2, 1.0, 4.0), 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(threshold_epsilon(4, 4, 3.0, 9.0), 2.0 / 6.0);
  for (std::size_t qs : {4, 6}) {
    for (double c : {2.0, 4.0, 9.0}) {
      for (double g : {1.0, 1.3, 2.0, 4.0}) {
        EXPECT_NEAR(threshold_epsilon(qs, 2, g, c), threshold_by_bisection(qs, 2, g, c), 1e-9);
      }
    }
  }
}

TEST(Detectability, ThresholdIncreasesWithGammaAndDegree) {
  double prev = 0;
  for (double g = 1.0; g <= 5.0; g += 0.25) {
    const double e = threshold_epsilon(4, 2, g, 4.0);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_LT(threshold_epsilon(4, 2, 2.0, 3.0), threshold_epsilon(4, 2, 2.0, 5.0));
}

TEST(Detectability, KestenStigumBoundary) {
  EXPECT_FALSE(ks_detectable(4.0, 0.5));
  EXPECT_TRUE(ks_detectable(4.0, 0.5 + 1e-12));
  // Consistency around the threshold from both sides.
  const double eps_star = threshold_epsilon(4, 2, 2.0, 4.0);
  for (double d : {0.01, 0.05}) {
    EXPECT_TRUE(ks_detectable(4.0, lambda1_closed_form(DetectabilitySpec{4, 2, 2.0, 4.0, eps_star - d})));
    EXPECT_FALSE(ks_detectable(4.0, lambda1_closed_form(DetectabilitySpec{4, 2, 2.0, 4.0, eps_star + d})));
  }
}

TEST(Detectability, InvalidArguments) {
  using crsbm::testing::error_code_of;
  EXPECT_EQ(error_code_of([] { transfer_matrix(DetectabilitySpec{4, 3, 2.0, 4.0, 0.5}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(error_code_of([] { threshold_epsilon(4, 2, 0.5, 4.0); }), ErrorCode::invalid_argument);
  EXPECT_EQ(error_code_of([] { threshold_epsilon(4, 2, 2.0, 1.0); }), ErrorCode::invalid_argument);
}
