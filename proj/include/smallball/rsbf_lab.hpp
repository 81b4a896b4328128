#pragma once

#include <vector>

#include "smallball/estimators.hpp"
#include "smallball/stats.hpp"

namespace smallball {

// Estimate of ell_eps = -log mu(B(center, eps)) for one sampled center.
struct RSBFSample {
  int center_id = 0;
  double eps = 0.0;
  ProbEstimate ell_hat;

  double ell() const { return -ell_hat.log_prob; }
  // ell() is only a lower bound (inner estimator saw no hit).
  bool bounded() const { return ell_hat.upper_bound; }
};

// Centers X_1..X_n drawn with sample(model, stream.child(0), n); the same centers serve
// every eps. Estimate (i, j) uses stream.child(1).child(i).child(j).
std::vector<RSBFSample> sample_rsbf(const GaussianModel& model, const NormSpec& norm, const std::vector<double>& eps_grid,
                                    int n_centers, const EstimatorOptions& opts, const RandomStream& stream);

// Same with explicit centers.
std::vector<RSBFSample> sample_rsbf_at(const GaussianModel& model, const NormSpec& norm, const std::vector<Path>& centers,
                                       const std::vector<double>& eps_grid, const EstimatorOptions& opts,
                                       const RandomStream& stream);

struct GaugeOptions {
  std::vector<double> moments = {1.0, 2.0};
  int bootstrap = 400;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Per-eps summary of ell over centers. Rows follow the decreasing eps grid.
struct GaugeCurve {
  std::vector<double> eps_grid;
  std::vector<std::vector<double>> values;   // [eps][center]
  std::vector<std::vector<double>> stderrs;  // inner-estimator stderr per value
  std::vector<double> median;                // lower median
  std::vector<double> mean;
  std::vector<double> mean_stderr;  // over centers plus inner error
  std::vector<double> stddev;
  std::vector<double> iqr;
  std::vector<Interval> median_ci;
  std::vector<Interval> mean_ci;
  std::vector<double> dispersion;  // iqr / median
  std::vector<Interval> dispersion_ci;
  std::vector<std::vector<double>> lp_moments;  // [moment index][eps], (E ell^p)^{1/p}
  std::vector<double> moments;
  std::vector<int> n_bounded;
  int n_centers = 0;
  bool low_power = false;  // fewer than 30 centers

  std::size_t index_of(double eps) const;
};

GaugeCurve gauge_stats(const std::vector<RSBFSample>& samples, const GaugeOptions& opts = {});

// Upper bound phi(eps) + (sqrt(2 phi(eps)) + ||Z||_{2p})^2 / 2 for ||ell_{2 eps}||_p, with Z
// standard normal. Input is phi at eps (half the radius being bounded).
double moment_bound_from_phi(double phi_half, double p);

struct VerifierConfig {
  double delta = 0.1;
  double nu = 4.5;
  double nu_tilde = 1.5;
  double nu1 = 1.0;
  double confidence = 3.0;

  void validate() const;
};

}  // namespace smallball
