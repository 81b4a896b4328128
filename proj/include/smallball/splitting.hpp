#pragma once

#include <vector>

#include "smallball/estimators.hpp"

namespace smallball {

struct SplittingLevel {
  double eps = 0.0;
  double conditional = 0.0;  // fraction of the population inside this level
  double acceptance = 0.0;   // move acceptance rate while refreshing at this level
  double rho = 0.0;
};

struct SplittingResult {
  ProbEstimate estimate;
  std::vector<SplittingLevel> levels;  // levels of the first replica
};

// Fixed-level splitting for P(||X - center|| <= eps). The population is refreshed at each
// level by the autoregressive move X' = rho X + sqrt(1 - rho^2) X_fresh, accepted when X'
// stays inside the level, which leaves the conditioned Gaussian law invariant.
SplittingResult ball_prob_splitting(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                                    const SplittingOptions& opts, const RandomStream& stream);

// Decreasing ladder from a level holding about half the mass down to eps, with
// conditional probabilities near opts.target_conditional. Uses the analytic centered
// curve when available and an adaptive-quantile pilot run otherwise.
std::vector<double> auto_ladder(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                                const SplittingOptions& opts, const RandomStream& stream);

}  // namespace smallball
