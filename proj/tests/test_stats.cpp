#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smallball/errors.hpp"
#include "smallball/stats.hpp"

using namespace smallball;

TEST(Stats, MomentsMedianQuantile) {
  const std::vector<double> x = {4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_DOUBLE_EQ(stddev(x), std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(standard_error(x), std::sqrt(5.0 / 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(lower_median(x), 2.0);
  EXPECT_DOUBLE_EQ(lower_median({5, 1, 3}), 3.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(interquartile_range(x), quantile(x, 0.75) - quantile(x, 0.25));
  EXPECT_EQ(stddev({1.0}), 0.0);
}

TEST(Stats, WilsonIntervalContainsRateAndShrinks) {
  const Interval a = wilson_interval(30, 100);
  EXPECT_LT(a.lo, 0.3);
  EXPECT_GT(a.hi, 0.3);
  const Interval b = wilson_interval(300, 1000);
  EXPECT_LT(b.hi - b.lo, a.hi - a.lo);
  const Interval z = wilson_interval(0, 50);
  EXPECT_EQ(z.lo, 0.0);
  EXPECT_GT(z.hi, 0.0);
  // Closed form check at p = 1/2.
  const double n = 100, zz = 1.959963984540054;
  const double half = zz * std::sqrt(0.25 / n + zz * zz / (4 * n * n)) / (1 + zz * zz / n);
  EXPECT_NEAR(wilson_interval(50, 100).hi, 0.5 + half, 1e-12);
}

TEST(Stats, BootstrapIntervalCoversMeanAndIsReproducible) {
  RandomStream s(1, 0);
  std::vector<double> x(400);
  for (auto& v : x) v = 3.0 + s.normal();
  auto stat = [](const std::vector<double>& v) { return mean(v); };
  const Interval a = bootstrap_interval(x, stat, 500, RandomStream(2, 0));
  const Interval b = bootstrap_interval(x, stat, 500, RandomStream(2, 0));
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  EXPECT_LT(a.lo, mean(x));
  EXPECT_GT(a.hi, mean(x));
  EXPECT_NEAR(a.hi - a.lo, 2 * 1.96 * standard_error(x), 0.3 * (a.hi - a.lo));
  EXPECT_THROW(bootstrap_interval(x, stat, 5, RandomStream(2, 0)), ConfigError);
}

TEST(Stats, KsOneSampleUniformity) {
  RandomStream s(3, 0);
  std::vector<double> u(2000);
  for (auto& v : u) v = s.uniform();
  EXPECT_GT(ks_one_sample(u, [](double t) { return std::clamp(t, 0.0, 1.0); }).p_value, 0.01);
  for (auto& v : u) v = v * v;
  EXPECT_LT(ks_one_sample(u, [](double t) { return std::clamp(t, 0.0, 1.0); }).p_value, 1e-6);
}

TEST(Stats, KsTwoSample) {
  RandomStream s(4, 0);
  std::vector<double> x(1000), y(1000), z(1000);
  for (int i = 0; i < 1000; ++i) {
    x[i] = s.normal();
    y[i] = s.normal();
    z[i] = s.normal() + 0.3;
  }
  EXPECT_GT(ks_two_sample(x, y).p_value, 0.01);
  EXPECT_LT(ks_two_sample(x, z).p_value, 1e-4);
  EXPECT_NEAR(kolmogorov_tail(1.36), 0.049, 0.002);
}

TEST(Stats, IsotonicRegressionPoolsViolators) {
  Eigen::VectorXd y(5);
  y << 1, 3, 2, 4, 3.5;
  const Eigen::VectorXd f = isotonic_regression(y, true);
  Eigen::VectorXd expect(5);
  expect << 1, 2.5, 2.5, 3.75, 3.75;
  EXPECT_TRUE(f.isApprox(expect));
  const Eigen::VectorXd g = isotonic_regression(-y, false);
  EXPECT_TRUE(g.isApprox(-expect));
  Eigen::VectorXd w(5);
  w << 1, 3, 1, 1, 1;
  EXPECT_NEAR(isotonic_regression(y, true, w)[1], 2.75, 1e-12);
}

TEST(Stats, WeightedLinearFit) {
  Eigen::VectorXd x(4), y(4);
  x << 0, 1, 2, 3;
  y << 1, 3, 5, 7;
  const LinearFit f = linear_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.residual_rms, 0.0, 1e-12);
  y[3] = 8;
  const LinearFit g = linear_fit(x, y);
  EXPECT_GT(g.slope_stderr, 0.0);
  EXPECT_THROW(linear_fit(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)), DataError);
}

TEST(Stats, LogLogInterpolantIsExactOnPowerLaws) {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 4, 8;
  for (int i = 0; i < 4; ++i) y[i] = 3.0 * std::pow(x[i], -2.0);
  const LogLogInterpolant f(x, y);
  EXPECT_NEAR(f(3.0), 3.0 / 9.0, 1e-12);
  EXPECT_NEAR(f(1.0), 3.0, 1e-12);
  EXPECT_THROW(f(0.5), RangeError);
  EXPECT_THROW(f(9.0), RangeError);
  Eigen::VectorXd bad(4);
  bad << 1, 2, 2, 3;
  EXPECT_ANY_THROW(LogLogInterpolant(bad, y));
}
