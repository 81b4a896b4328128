#pragma once

#include <string>
#include <vector>

#include "smallball/estimators.hpp"
#include "smallball/rsbf_lab.hpp"
#include "smallball/stats.hpp"
#include "smallball/verifiers.hpp"

namespace smallball {

// Increment flow (theta_t w)(s) = w(t + s) - w(t) on [0, T - t]; t must be a grid time.
struct FlowShift {
  double t = 0.0;

  Path apply(const Path& w) const;
};

Path flow_shift(const Path& w, double t);

struct TildeResult {
  ProbEstimate estimate;  // log of the maximized probability
  Eigen::VectorXd x_star;
};

// -sup_x log P^x(||W - w|| <= eps) for a Wiener model (W started at x). d = 1 sup over the
// whole horizon uses the transfer maximizer; otherwise a 9-point scan spot-checks
// unimodality (DiagnosticError on a three-point violation beyond noise) and golden
// section refines it, coordinate-wise for d <= 3, every evaluation on the same stream.
// Hoelder seminorms do not see constants: x* = 0 and the value equals the plain estimate.
TildeResult tilde_rsbf(const GaussianModel& model, const NormSpec& norm, const Path& w, double eps,
                       const EstimatorOptions& opts, const RandomStream& stream);

enum class SeriesKind { hard, soft };

std::string series_kind_name(SeriesKind k);

// Lambda(a) (hard) or Lambda_a (soft) over an increasing a grid. per_path[k][i] is the
// path functional of center i at a_grid[k]; centers at different a are independent.
struct SubadditiveSeries {
  SeriesKind kind = SeriesKind::hard;
  std::vector<double> a_grid;
  std::vector<double> values;
  std::vector<double> stderrs;
  std::vector<std::vector<double>> per_path;
  // Weighted fit values ~ slope * a + intercept on the upper half of the grid.
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  double ratio_last = 0.0;  // values.back() / a_grid.back()
  double q = 0.0;           // soft exponent, soft kind only
  double K = 0.0;           // -slope, soft kind only
  double constant = 0.0;    // hard: slope; soft: soft_to_hard(K, q)
  double constant_stderr = 0.0;
  bool partial = false;  // a grid truncated where the estimator broke down

  std::vector<double> ratios() const;
  std::vector<double> ratio_stderrs() const;
};

struct SeriesOptions {
  std::vector<double> a_grid = {1.0, 2.0, 4.0, 8.0, 16.0};
  int n_centers = 200;
  // Grid step at every a; 0 keeps the model's.
  double dt = 0.0;
  TransferOptions transfer;
};

// Lambda(a) = E lbar_a, lbar_a(w) = -sup_x log P^x(||W - w||_[0,a] <= 1). Needs a d = 1
// Wiener model.
SubadditiveSeries lambda_hard(const GaussianModel& model, const SeriesOptions& opts, const RandomStream& stream);

// Lambda_a = E sup_x log E^x exp(-||W - w||_p^p on [0, a]). Refuses norms other than
// L^p and soft exponents q <= 1.
SubadditiveSeries lambda_soft(const GaussianModel& model, const NormSpec& norm, const SeriesOptions& opts,
                              const RandomStream& stream);

// (q - 1) (K / q)^{q / (q - 1)}; DomainError unless q > 1 and K > 0.
double soft_to_hard(double K, double q);

// Lambda(a) / a nondecreasing (hard) or nonincreasing (soft) within confidence * SE.
VerifierReport check_series_trend(const SubadditiveSeries& series, double confidence = 3.0);

// Per-path split of [0, a + b] at a on shared paths w:
//   hard: lbar_{a+b}(w) >= lbar_a(w) + lbar_b(theta_a w)
//   soft: Lambda_{a+b}(w) <= Lambda_a(w) + Lambda_b(theta_a w)
struct SplitCheck {
  VerifierReport report;
  std::vector<double> whole;
  std::vector<double> first;
  std::vector<double> second;
  std::vector<double> tolerance;  // confidence * summed quadrature errors per path
  double mean_gap = 0.0;          // mean of whole - first - second
  double gap_stderr = 0.0;
  int n_violations = 0;
};

SplitCheck check_split(const GaussianModel& model, SeriesKind kind, const NormSpec& norm, double a, double b,
                       int n_paths, const TransferOptions& opts, const RandomStream& stream, double confidence = 3.0);

// Principal eigenvalue of -1/2 Laplacian on the unit ball of R^d, d <= 3.
double dirichlet_eigenvalue(int d);

// tilde-ell_eps on [0, 1] and lbar_{1 / eps^2} on [0, 1 / eps^2], both on n_steps steps,
// from independent paths; two-sample KS between them.
struct EquidistributionResult {
  double eps = 0.0;
  std::vector<double> tilde;
  std::vector<double> bar;
  KsResult ks;
};

EquidistributionResult equidistribution_check(double eps, long n_steps, int n_paths, const TransferOptions& opts,
                                              const RandomStream& stream);

enum class ConstantMode { eps_fit, subadditive };

struct ConstantParams {
  // eps_fit: decreasing eps grid for the gauge mean; empty picks 4 geometric points
  // where the centered function spans [5, 20] nats.
  std::vector<double> eps_grid;
  // Rate exponent; 0 takes it from the norm, anything else must agree with it.
  double gamma = 0.0;
  int n_centers = 200;
  EstimatorOptions estimator;
  SeriesOptions series;
};

struct ConstantEstimate {
  ConstantMode mode = ConstantMode::eps_fit;
  double value = 0.0;
  double stderr_value = 0.0;
  double gamma = 0.0;
  std::vector<double> eps_grid;
  std::vector<double> scaled;  // eps^gamma * mean ell per grid point (eps_fit)
  SubadditiveSeries series;    // subadditive mode
  std::string diagnostics;
};

// eps_fit regresses the mean of ell_eps on eps^{-gamma} with an intercept and reports the
// slope; subadditive delegates to lambda_hard (sup) or lambda_soft (L^p).
ConstantEstimate estimate_constant(const GaussianModel& model, const NormSpec& norm, ConstantMode mode,
                                   const ConstantParams& params, const RandomStream& stream);

}  // namespace smallball
