#include "smallball/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smallball/errors.hpp"

namespace smallball {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw DataError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double standard_error(const std::vector<double>& x) {
  return x.empty() ? 0.0 : stddev(x) / std::sqrt(static_cast<double>(x.size()));
}

double lower_median(std::vector<double> x) {
  if (x.empty()) throw DataError("median of an empty sample");
  const auto mid = x.begin() + static_cast<std::ptrdiff_t>((x.size() - 1) / 2);
  std::nth_element(x.begin(), mid, x.end());
  return *mid;
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double interquartile_range(const std::vector<double>& x) { return quantile(x, 0.75) - quantile(x, 0.25); }

namespace {
Interval percentile_interval(std::vector<double> stats, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {quantile(stats, tail), quantile(std::move(stats), 1.0 - tail)};
}
}  // namespace

Interval bootstrap_interval(const std::vector<double>& x, const std::function<double(const std::vector<double>&)>& statistic,
                            int replicates, const RandomStream& stream, double level) {
  return bootstrap_interval_paired(
      {x}, [&](const std::vector<std::vector<double>>& cols) { return statistic(cols[0]); }, replicates, stream, level);
}

Interval bootstrap_interval_paired(const std::vector<std::vector<double>>& columns,
                                   const std::function<double(const std::vector<std::vector<double>>&)>& statistic,
                                   int replicates, const RandomStream& stream, double level) {
  if (columns.empty() || columns[0].empty()) throw DataError("bootstrap of an empty sample");
  if (replicates < 10) throw ConfigError("bootstrap needs at least 10 replicates");
  const std::size_t n = columns[0].size();
  for (const auto& c : columns)
    if (c.size() != n) throw ShapeError("bootstrap columns differ in length");

  std::vector<double> stats(static_cast<std::size_t>(replicates));
  std::vector<std::vector<double>> resampled(columns.size(), std::vector<double>(n));
  for (int r = 0; r < replicates; ++r) {
    RandomStream s = stream.child(static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(s.below(n));
      for (std::size_t c = 0; c < columns.size(); ++c) resampled[c][i] = columns[c][j];
    }
    stats[static_cast<std::size_t>(r)] = statistic(resampled);
  }
  return percentile_interval(std::move(stats), level);
}

Interval wilson_interval(long successes, long trials, double z) {
  if (trials <= 0 || successes < 0 || successes > trials) throw DomainError("wilson_interval: invalid counts");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  // The endpoints are exactly 0 and 1 at the boundary counts.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.3) return 1.0;  // series is numerically 1 here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw DataError("KS test of an empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw DataError("KS test of an empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = std::sqrt(nx * ny / (nx + ny));
  return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

Eigen::VectorXd isotonic_regression(const Eigen::VectorXd& y, bool increasing, const Eigen::VectorXd& weights) {
  const Eigen::Index n = y.size();
  if (weights.size() != 0 && weights.size() != n) throw ShapeError("isotonic_regression: weight length mismatch");
  const double sign = increasing ? 1.0 : -1.0;
  std::vector<double> level, weight;
  std::vector<Eigen::Index> count;
  for (Eigen::Index i = 0; i < n; ++i) {
    level.push_back(sign * y[i]);
    weight.push_back(weights.size() ? weights[i] : 1.0);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double v = (level[level.size() - 2] * weight[weight.size() - 2] + level.back() * weight.back()) / w;
      const Eigen::Index c = count[count.size() - 2] + count.back();
      level.pop_back();
      weight.pop_back();
      count.pop_back();
      level.back() = v;
      weight.back() = w;
      count.back() = c;
    }
  }
  Eigen::VectorXd out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < level.size(); ++b)
    for (Eigen::Index k = 0; k < count[b]; ++k) out[pos++] = sign * level[b];
  return out;
}

LinearFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights) {
  const Eigen::Index n = x.size();
  if (y.size() != n || (weights.size() != 0 && weights.size() != n)) throw ShapeError("linear_fit: length mismatch");
  if (n < 2) throw DataError("linear_fit needs at least two points");
  const Eigen::VectorXd w = weights.size() ? weights : Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd design(n, 2);
  design.col(0) = x;
  design.col(1).setOnes();
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd a = sw.asDiagonal() * design;
  const Eigen::VectorXd b = sw.asDiagonal() * y;
  const Eigen::Matrix2d normal = a.transpose() * a;
  const Eigen::Vector2d coef = normal.ldlt().solve(a.transpose() * b);

  LinearFit fit;
  fit.slope = coef[0];
  fit.intercept = coef[1];
  const Eigen::VectorXd resid = y - design * coef;
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  // With explicit inverse-variance weights the covariance is (A^T A)^{-1}; otherwise it is
  // scaled by the residual variance.
  const double scale = weights.size() ? 1.0 : (n > 2 ? resid.squaredNorm() / static_cast<double>(n - 2) : 0.0);
  const Eigen::Matrix2d cov = scale * normal.inverse();
  fit.slope_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
  fit.intercept_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
  return fit;
}

LogLogInterpolant::LogLogInterpolant(Eigen::VectorXd x, Eigen::VectorXd y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("LogLogInterpolant needs two or more matching knots");
  if ((x.array() <= 0.0).any() || (y.array() <= 0.0).any()) throw DataError("LogLogInterpolant needs positive knots");
  // Sort by x so that evaluation can bisect.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
  lx_.resize(x.size());
  ly_.resize(y.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    lx_[k] = std::log(x[order[static_cast<std::size_t>(k)]]);
    ly_[k] = std::log(y[order[static_cast<std::size_t>(k)]]);
  }
  for (Eigen::Index k = 1; k < lx_.size(); ++k) {
    if (!(lx_[k] > lx_[k - 1])) throw DataError("LogLogInterpolant: repeated abscissa");
    if ((ly_[k] - ly_[k - 1]) * (ly_[1] - ly_[0]) <= 0.0) throw DataError("LogLogInterpolant: knots are not strictly monotone");
  }
}

double LogLogInterpolant::operator()(double x) const {
  if (!(x > 0.0)) throw RangeError("LogLogInterpolant: argument must be positive");
  const double lx = std::log(x);
  const double tol = 1e-12 * std::max(1.0, std::abs(lx));
  if (lx < lx_[0] - tol || lx > lx_[lx_.size() - 1] + tol) throw RangeError("LogLogInterpolant: argument outside knot range");
  const auto it = std::upper_bound(lx_.data(), lx_.data() + lx_.size(), lx);
  Eigen::Index k = std::clamp<Eigen::Index>(it - lx_.data(), 1, lx_.size() - 1);
  const double w = std::clamp((lx - lx_[k - 1]) / (lx_[k] - lx_[k - 1]), 0.0, 1.0);
  if (w == 0.0) return std::exp(ly_[k - 1]);
  if (w == 1.0) return std::exp(ly_[k]);
  return std::exp(ly_[k - 1] + w * (ly_[k] - ly_[k - 1]));
}

}  // namespace smallball
