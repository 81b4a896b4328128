#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smallball/gaussian_models.hpp"
#include "smallball/norms.hpp"
#include "smallball/random.hpp"
#include "smallball/transfer.hpp"

namespace smallball {

enum class Method { analytic, mc, splitting, cm_reweighted, transfer };

std::string method_name(Method m);
Method parse_method(const std::string& name);

// Natural-log probability estimate. upper_bound marks a Monte-Carlo underflow: no hit
// was observed and log_prob carries the rule-of-three bound log(3 / n), stderr_log is
// then +infinity.
struct ProbEstimate {
  double log_prob = 0.0;
  double stderr_log = 0.0;
  long n_samples = 0;
  Method method = Method::analytic;
  bool upper_bound = false;

  double phi() const { return -log_prob; }
};

// Combined standard error of a difference of two estimates.
double combined_stderr(const ProbEstimate& a, const ProbEstimate& b);

// phi over a decreasing eps grid.
struct SBFCurve {
  std::vector<double> eps_grid;
  std::vector<ProbEstimate> phi;

  // Estimate at a grid point; throws RangeError when eps is not on the grid.
  const ProbEstimate& at(double eps) const;
  bool contains(double eps) const;
};

// Closed-form centered ball probability where the law of the norm is known: scalar,
// finite spectrum with the max-coordinate norm, Wiener (d = 1) and bridge with the sup
// norm over the whole horizon. Wiener and bridge values are continuum values.
std::optional<ProbEstimate> sbf_analytic(const GaussianModel& model, const NormSpec& norm, double eps);

// Closed form for an arbitrary center (scalar, finite spectrum sup); centered path
// models fall back to sbf_analytic.
std::optional<ProbEstimate> ball_prob_analytic(const GaussianModel& model, const NormSpec& norm, const Path& center,
                                               double eps);

// Plain Monte Carlo of P(||X - center|| <= eps). Samples are drawn in fixed blocks with
// one child stream each, so the result does not depend on the worker count.
ProbEstimate ball_prob_mc(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps, long n_samples,
                          const RandomStream& stream);

// P(||X - h|| <= eps) as E[1{||X|| <= eps} w(-h, X)] with Cameron-Martin weights.
ProbEstimate ball_prob_cm(const GaussianModel& model, const NormSpec& norm, const CmShift& shift, double eps,
                          long n_samples, const RandomStream& stream);

// True when the lattice transfer estimator applies: Wiener d = 1, sup norm over the
// whole horizon.
bool transfer_supported(const GaussianModel& model, const NormSpec& norm);

// Deterministic lattice estimate on the model grid; stderr_log is the quadrature error
// estimate.
ProbEstimate ball_prob_transfer(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                                const TransferOptions& opts = {});

struct SplittingOptions {
  // Explicit decreasing ladder ending at eps; empty means automatic construction.
  std::vector<double> levels;
  int n_particles = 2000;
  double rho = 0.95;
  int moves = 10;
  bool adapt_rho = true;
  double target_conditional = 0.3;
  // Independent runs; with two or more the standard error comes from their spread.
  int replicas = 1;
  int pilot_particles = 400;
};

struct EstimatorOptions {
  Method method = Method::mc;
  long n_samples = 100000;
  SplittingOptions splitting;
  TransferOptions transfer;
};

// Dispatches to the requested estimator. Method::analytic throws ConfigError when the
// pair (model, norm) has no closed form.
ProbEstimate ball_prob(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                       const EstimatorOptions& opts, const RandomStream& stream);

// Centered curve; eps_grid must be strictly decreasing. Grid point i uses stream.child(i).
SBFCurve sbf_curve(const GaussianModel& model, const NormSpec& norm, const std::vector<double>& eps_grid,
                   const EstimatorOptions& opts, const RandomStream& stream);

// Richardson-type extrapolation of grid estimates to dt -> 0. Fits
// value = limit + slope * sqrt(dt) by weighted least squares.
struct Extrapolation {
  double value = 0.0;
  double stderr_value = 0.0;
  double slope = 0.0;
};

Extrapolation extrapolate_in_step(const std::vector<double>& dt, const std::vector<double>& values,
                                  const std::vector<double>& stderrs);

}  // namespace smallball
