#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smallball/special_functions.hpp"

using namespace smallball;

TEST(Normal, CdfPdfAndTail) {
  for (double x : {-8.0, -3.0, -0.5, 0.0, 0.7, 2.0, 6.0}) {
    EXPECT_NEAR(normal_cdf(x), oracle::normal_cdf(x), 1e-15);
    EXPECT_NEAR(normal_pdf(x), oracle::normal_pdf(x), 1e-15);
    EXPECT_NEAR(normal_cdf(x) + normal_tail(x), 1.0, 1e-15);
  }
  EXPECT_NEAR(log_normal_cdf(-40.0), -800.0 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(40.0) + std::log1p(-1.0 / 1600.0 + 3.0 / 2.56e6), 1e-6);
  EXPECT_NEAR(log_normal_cdf(1.0), std::log(oracle::normal_cdf(1.0)), 1e-14);
}

TEST(Normal, QuantileInvertsCdf) {
  for (double p : {1e-300, 1e-12, 1e-3, 0.02, 0.3, 0.5, 0.77, 0.999, 1 - 1e-12}) {
    const double x = normal_quantile(p);
    EXPECT_NEAR(normal_cdf(x) / p, 1.0, 1e-9) << p;
  }
  EXPECT_EQ(normal_quantile(0.5), 0.0);
}

TEST(SupBrownian, MatchesThetaSeries) {
  for (double eps : {0.05, 0.2, 0.3, 0.5, 0.8, 1.0, 1.5, 3.0})
    EXPECT_NEAR(-log_sup_brownian_small_ball(eps), oracle::brownian_sup_phi(eps), 1e-10 * (1 + oracle::brownian_sup_phi(eps)))
        << eps;
}

TEST(SupBrownian, SmallRadiusLeadingTerm) {
  // For small eps the first theta term dominates: phi = pi^2 / (8 eps^2) - log(4 / pi).
  const double eps = 0.05;
  EXPECT_NEAR(-log_sup_brownian_small_ball(eps), std::numbers::pi * std::numbers::pi / (8 * eps * eps) - std::log(4 / std::numbers::pi),
              1e-9);
}

TEST(SupBridge, BothSeriesRepresentationsAgree) {
  for (double eps : {0.2, 0.5, 1.0, 2.0}) {
    double kolmogorov = 1.0;
    for (int k = 1; k < 200; ++k) kolmogorov += 2.0 * (k % 2 ? -1.0 : 1.0) * std::exp(-2.0 * k * k * eps * eps);
    double theta = 0.0;
    for (int k = 1; k < 200; ++k) {
      const double m = 2.0 * k - 1.0;
      theta += std::exp(-m * m * std::numbers::pi * std::numbers::pi / (8.0 * eps * eps));
    }
    theta *= std::sqrt(2.0 * std::numbers::pi) / eps;
    EXPECT_NEAR(kolmogorov, theta, 1e-12);
    EXPECT_NEAR(log_sup_bridge_small_ball(eps), std::log(theta), 1e-9);
  }
}

TEST(AbsMoment, KnownValues) {
  EXPECT_NEAR(normal_abs_moment(0.0), 1.0, 1e-14);
  EXPECT_NEAR(normal_abs_moment(1.0), std::sqrt(2.0 / std::numbers::pi), 1e-14);
  EXPECT_NEAR(normal_abs_moment(2.0), 1.0, 1e-14);
  EXPECT_NEAR(normal_abs_moment(4.0), 3.0, 1e-13);
  EXPECT_NEAR(normal_abs_moment(3.0), 2.0 * std::sqrt(2.0 / std::numbers::pi), 1e-13);
}
