#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "smallball/random.hpp"

namespace smallball {

double mean(const std::vector<double>& x);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(const std::vector<double>& x);
double standard_error(const std::vector<double>& x);

// Element (n - 1) / 2 of the sorted sample (lower median for even n).
double lower_median(std::vector<double> x);
// Linear-interpolation quantile of a sample, q in [0, 1].
double quantile(std::vector<double> x, double q);
double interquartile_range(const std::vector<double>& x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap interval for statistic(sample) over resampled copies of x.
Interval bootstrap_interval(const std::vector<double>& x, const std::function<double(const std::vector<double>&)>& statistic,
                            int replicates, const RandomStream& stream, double level = 0.95);

// Bootstrap over several paired columns resampled with the same indices; statistic sees
// the resampled columns.
Interval bootstrap_interval_paired(const std::vector<std::vector<double>>& columns,
                                   const std::function<double(const std::vector<std::vector<double>>&)>& statistic,
                                   int replicates, const RandomStream& stream, double level = 0.95);

// Wilson score interval for a binomial proportion.
Interval wilson_interval(long successes, long trials, double z = 1.959963984540054);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);
KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> x, std::vector<double> y);

// Pool-adjacent-violators fit; weights default to 1.
Eigen::VectorXd isotonic_regression(const Eigen::VectorXd& y, bool increasing, const Eigen::VectorXd& weights = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double residual_rms = 0.0;
};

// Weighted least squares y = slope * x + intercept; weights are inverse variances.
LinearFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights = {});

// Monotone piecewise-linear map in (log x, log y) coordinates through strictly monotone
// positive knots. Evaluation outside the knot range throws RangeError.
class LogLogInterpolant {
 public:
  LogLogInterpolant(Eigen::VectorXd x, Eigen::VectorXd y);
  double operator()(double x) const;
  double x_min() const { return std::exp(lx_[0]); }
  double x_max() const { return std::exp(lx_[lx_.size() - 1]); }
  const Eigen::VectorXd& log_x() const { return lx_; }
  const Eigen::VectorXd& log_y() const { return ly_; }

 private:
  Eigen::VectorXd lx_;
  Eigen::VectorXd ly_;
};

}  // namespace smallball
