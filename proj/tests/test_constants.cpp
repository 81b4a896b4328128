#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smallball/constants_lab.hpp"
#include "smallball/errors.hpp"
#include "smallball/transfer.hpp"

using namespace smallball;

namespace {

const EstimatorOptions kTransfer{Method::transfer};

SeriesOptions small_series() {
  SeriesOptions o;
  o.a_grid = {1.0, 2.0, 4.0};
  o.n_centers = 40;
  o.dt = 1.0 / 64;
  return o;
}

}  // namespace

TEST(Flow, IncrementFlowValuesAndComposition) {
  const auto m = GaussianModel::wiener(16, 2.0);
  RandomStream s(1, 0);
  const Path w = sample_path(m, s);
  const Path shifted = flow_shift(w, 0.5);
  ASSERT_EQ(shifted.n_nodes(), w.n_nodes() - 4);
  EXPECT_EQ(shifted.values(0, 0), 0.0);
  for (Eigen::Index k = 0; k < shifted.n_nodes(); ++k) EXPECT_DOUBLE_EQ(shifted.values(k, 0), w.values(k + 4, 0) - w.values(4, 0));
  const Path twice = flow_shift(flow_shift(w, 0.5), 0.75);
  const Path once = flow_shift(w, 1.25);
  EXPECT_TRUE(twice.values.isApprox(once.values, 1e-14));
  EXPECT_EQ(FlowShift{0.5}.apply(w).values, shifted.values);
  EXPECT_THROW(flow_shift(w, 0.3), ConfigError);
  EXPECT_THROW(flow_shift(w, 2.0), RangeError);
}

TEST(Dirichlet, ClosedFormsMatchExitTimeSimulation) {
  EXPECT_NEAR(dirichlet_eigenvalue(1), std::numbers::pi * std::numbers::pi / 8.0, 1e-15);
  EXPECT_THROW(dirichlet_eigenvalue(4), ConfigError);
  const double windows[3][2] = {{0.5, 2.5}, {0.3, 1.3}, {0.2, 0.8}};
  for (int d = 1; d <= 3; ++d) {
    const double rate = oracle::exit_rate(d, 100000, 1e-3, windows[d - 1][0], windows[d - 1][1], 100 + d);
    EXPECT_NEAR(rate / dirichlet_eigenvalue(d), 1.0, 0.03) << "d = " << d;
  }
}

TEST(SoftToHard, ClosedFormAndRefusals) {
  for (double K : {0.5, 1.0, 3.0}) EXPECT_NEAR(soft_to_hard(K, 2.0), K * K / 4.0, 1e-14);
  EXPECT_NEAR(soft_to_hard(2.0, 3.0), 2.0 * std::pow(2.0 / 3.0, 1.5), 1e-14);
  EXPECT_THROW(soft_to_hard(1.0, 1.0), DomainError);
  EXPECT_THROW(soft_to_hard(0.0, 2.0), DomainError);
}

TEST(Tilde, InvariantUnderConstantShiftsWithTransfer) {
  const auto m = GaussianModel::wiener(128);
  RandomStream s(2, 0);
  const Path w = sample_path(m, s);
  const auto base = tilde_rsbf(m, NormSpec::sup_norm(), w, 0.5, kTransfer, RandomStream(3, 0));
  for (double c : {0.0, 1.0, 5.0}) {
    Path wc = w;
    wc.values.array() += c;
    const auto t = tilde_rsbf(m, NormSpec::sup_norm(), wc, 0.5, kTransfer, RandomStream(3, 0));
    EXPECT_NEAR(t.estimate.log_prob, base.estimate.log_prob, 2e-3 + base.estimate.stderr_log) << c;
    EXPECT_NEAR(t.x_star[0], base.x_star[0] + c, 0.02) << c;
  }
}

TEST(Tilde, DominatesPlainEstimateUnderSharedStream) {
  const auto m = GaussianModel::wiener(128);
  RandomStream s(4, 0);
  for (int i = 0; i < 5; ++i) {
    const Path w = sample_path(m, s);
    const auto t = tilde_rsbf(m, NormSpec::sup_norm(), w, 0.5, kTransfer, RandomStream(5, 0));
    const auto plain = ball_prob(m, NormSpec::sup_norm(), w, 0.5, kTransfer, RandomStream(5, 0));
    EXPECT_GE(t.estimate.log_prob, plain.log_prob - 1e-12);
  }
}

TEST(Tilde, ScanSearchInTwoDimensions) {
  const auto m = GaussianModel::wiener(16, 1.0, 2);
  RandomStream s(6, 0);
  const Path w = sample_path(m, s);
  EstimatorOptions mc{Method::mc, 20000};
  const auto t = tilde_rsbf(m, NormSpec::sup_norm(), w, 1.0, mc, RandomStream(7, 0));
  const auto plain = ball_prob(m, NormSpec::sup_norm(), w, 1.0, mc, RandomStream(7, 0));
  EXPECT_GE(t.estimate.log_prob, plain.log_prob);
  ASSERT_EQ(t.x_star.size(), 2);
  // A constant shift leaves the maximized value unchanged up to search noise.
  Path wc = w;
  wc.values.col(1).array() += 1.0;
  const auto tc = tilde_rsbf(m, NormSpec::sup_norm(), wc, 1.0, mc, RandomStream(7, 0));
  EXPECT_NEAR(tc.estimate.log_prob, t.estimate.log_prob, 4 * t.estimate.stderr_log + 0.05);
}

TEST(Tilde, HoelderEqualsPlainEstimateExactly) {
  const auto m = GaussianModel::wiener(32);
  RandomStream s(8, 0);
  const Path w = sample_path(m, s);
  const EstimatorOptions mc{Method::mc, 20000};
  const auto norm = NormSpec::hoelder(0.2);
  const auto t = tilde_rsbf(m, norm, w, 1.5, mc, RandomStream(9, 0));
  const auto plain = ball_prob(m, norm, w, 1.5, mc, RandomStream(9, 0));
  EXPECT_EQ(t.estimate.log_prob, plain.log_prob);
  EXPECT_EQ(t.x_star, Eigen::VectorXd::Zero(1));
  Path wc = w;
  wc.values.array() += 5.0;
  EXPECT_EQ(tilde_rsbf(m, norm, wc, 1.5, mc, RandomStream(9, 0)).estimate.log_prob, t.estimate.log_prob);
}

TEST(Tilde, Refusals) {
  const auto scalar = GaussianModel::scalar(1.0);
  EXPECT_THROW(tilde_rsbf(scalar, NormSpec::sup_norm(), scalar.zero_path(), 0.5, kTransfer, RandomStream(1, 0)), ConfigError);
  const auto w4 = GaussianModel::wiener(8, 1.0, 4);
  EXPECT_THROW(tilde_rsbf(w4, NormSpec::sup_norm(), w4.zero_path(), 0.5, kTransfer, RandomStream(1, 0)), ConfigError);
}

TEST(Series, HardSeriesIsSuperadditiveInTrend) {
  const auto s = lambda_hard(GaussianModel::wiener(64), small_series(), RandomStream(10, 0));
  EXPECT_EQ(s.kind, SeriesKind::hard);
  ASSERT_EQ(s.values.size(), 3u);
  for (double v : s.values) EXPECT_GT(v, 0.0);
  EXPECT_FALSE(s.partial);
  EXPECT_EQ(s.constant, s.slope);
  const auto rep = check_series_trend(s);
  EXPECT_EQ(rep.tag, "fekete-hard");
  EXPECT_TRUE(rep.passed());
  // Every center is at least as costly as the centered tube on the same grid.
  for (std::size_t k = 0; k < s.a_grid.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(std::lround(s.a_grid[k] * 64));
    EXPECT_GE(s.values[k], -tube_log_prob(Eigen::VectorXd::Zero(n + 1), 1.0 / 64, 1.0, 0.0).log_value - 1e-3);
  }
}

TEST(Series, SoftSeriesIsSubadditiveInTrend) {
  const auto s = lambda_soft(GaussianModel::wiener(64), NormSpec::lp_norm(2.0), small_series(), RandomStream(11, 0));
  EXPECT_EQ(s.kind, SeriesKind::soft);
  EXPECT_EQ(s.q, 2.0);
  EXPECT_GT(s.K, 0.0);
  EXPECT_NEAR(s.constant, soft_to_hard(s.K, s.q), 1e-12);
  for (double v : s.values) EXPECT_LT(v, 0.0);
  const auto rep = check_series_trend(s);
  EXPECT_EQ(rep.tag, "fekete-soft");
  EXPECT_TRUE(rep.passed());
}

TEST(Series, Refusals) {
  const auto m = GaussianModel::wiener(64);
  EXPECT_THROW(lambda_soft(m, NormSpec::sup_norm(), small_series(), RandomStream(1, 0)), ConfigError);
  EXPECT_THROW(lambda_soft(m, NormSpec::hoelder(0.1), small_series(), RandomStream(1, 0)), ConfigError);
  EXPECT_THROW(lambda_hard(GaussianModel::wiener(64, 1.0, 2), small_series(), RandomStream(1, 0)), ConfigError);
  SeriesOptions bad = small_series();
  bad.a_grid = {2.0, 1.0};
  EXPECT_THROW(lambda_hard(m, bad, RandomStream(1, 0)), ConfigError);
  bad.a_grid = {1.0, 32.0};
  EXPECT_THROW(lambda_hard(m, bad, RandomStream(1, 0)), ConfigError);
  ConstantParams p;
  EXPECT_THROW(estimate_constant(m, NormSpec::hoelder(0.1), ConstantMode::subadditive, p, RandomStream(1, 0)), ConfigError);
  p.gamma = 3.0;
  EXPECT_THROW(estimate_constant(m, NormSpec::sup_norm(), ConstantMode::subadditive, p, RandomStream(1, 0)), ConfigError);
}

TEST(Split, HardAndSoftPerPathInequalities) {
  const auto m = GaussianModel::wiener(64);
  const auto hard = check_split(m, SeriesKind::hard, NormSpec::sup_norm(), 1.0, 1.0, 30, {}, RandomStream(12, 0));
  EXPECT_EQ(hard.report.tag, "superadditivity");
  EXPECT_EQ(hard.n_violations, 0);
  EXPECT_TRUE(hard.report.passed());
  EXPECT_GE(hard.mean_gap, 0.0);
  const auto soft = check_split(m, SeriesKind::soft, NormSpec::lp_norm(2.0), 1.0, 1.0, 30, {}, RandomStream(13, 0));
  EXPECT_EQ(soft.report.tag, "subadditivity");
  EXPECT_EQ(soft.n_violations, 0);
  EXPECT_TRUE(soft.report.passed());
  EXPECT_LE(soft.mean_gap, 0.0);
  EXPECT_THROW(check_split(m, SeriesKind::soft, NormSpec::sup_norm(), 1.0, 1.0, 10, {}, RandomStream(1, 0)), ConfigError);
}

TEST(Equidistribution, ScalingIdentityHoldsInLaw) {
  const auto r = equidistribution_check(1.0 / std::numbers::sqrt2, 128, 150, {}, RandomStream(14, 0));
  EXPECT_EQ(r.tilde.size(), 150u);
  EXPECT_GT(r.ks.p_value, 0.01);
}

TEST(Constant, EpsFitOnWiener) {
  ConstantParams p;
  p.n_centers = 40;
  p.estimator = kTransfer;
  // Coarse monitoring biases the slope down, so the grid must resolve the smallest radius.
  const auto c = estimate_constant(GaussianModel::wiener(2048), NormSpec::sup_norm(), ConstantMode::eps_fit, p, RandomStream(15, 0));
  EXPECT_EQ(c.gamma, 2.0);
  EXPECT_EQ(c.eps_grid.size(), 4u);
  EXPECT_EQ(c.scaled.size(), 4u);
  EXPECT_GT(c.value, 2.0 * dirichlet_eigenvalue(1) * 0.8);
  EXPECT_LT(c.value, 8.0 * dirichlet_eigenvalue(1));
}
