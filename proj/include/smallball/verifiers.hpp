#pragma once

#include <string>
#include <vector>

#include "smallball/estimators.hpp"
#include "smallball/rsbf_lab.hpp"

namespace smallball {

enum class Verdict { pass, fail, informational };

std::string verdict_name(Verdict v);

// One checked inequality lhs <= rhs (up to tolerance) at abscissa x.
struct VerifierRow {
  std::string check;
  double x = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::pass;
  std::string note;
};

// Rows carry a stable tag naming the checked property, e.g. "enclosure" or
// "gauge-sandwich", so reports can be audited by grep.
struct VerifierReport {
  std::string name;
  std::string tag;
  std::vector<VerifierRow> rows;

  // fail if any row fails; informational if every row is informational.
  Verdict verdict() const;
  bool passed() const { return verdict() != Verdict::fail; }
  void add(std::string check, double x, double lhs, double rhs, double tolerance, std::string note = {});
  void add_informational(std::string check, double x, double lhs, double rhs, std::string note = {});
};

// phi(eps) <= ell for every center, and the fraction of centers with
// ell <= (1 + delta) 2 phi(eps / 2) not decreasing as eps decreases. Needs phi at every
// gauge eps and at eps / 2.
VerifierReport verify_enclosure(const SBFCurve& sbf, const GaugeCurve& gauge, const VerifierConfig& cfg);

// phi(eps / sqrt 2) <= (1 + delta) E ell_eps <= (1 + delta)^2 2 phi(eps / 2), plus
// phi(eps) <= median and phi(eps) <= mean.
VerifierReport verify_gauge_sandwich(const SBFCurve& sbf, const GaugeCurve& gauge, const VerifierConfig& cfg);

enum class DoublingKind { regularity, growth };

struct DoublingReport {
  VerifierReport report;
  std::vector<double> eps;
  std::vector<double> ratio;  // phi(eps) / phi(2 eps)
  double fitted = 0.0;        // max ratio (regularity) or min ratio (growth)
  bool holds = false;
};

// regularity: phi(eps) <= nu phi(2 eps); growth: phi(eps) >= nu_tilde phi(2 eps). Uses
// every grid eps whose double is also on the grid.
DoublingReport check_doubling(const SBFCurve& sbf, DoublingKind which, const VerifierConfig& cfg);

// IQR(ell) / median nonincreasing as eps decreases, within bootstrap intervals.
VerifierReport check_concentration_trend(const GaugeCurve& gauge);
// |mean / median - 1| not growing as eps decreases, within bootstrap intervals.
VerifierReport check_mean_median_trend(const GaugeCurve& gauge, std::uint64_t seed = 0);

// True when x = y + h is exhibited with ||y|| <= eps and |h|_mu <= radius. Candidates:
// exact decompositions for scalar and finite spectrum models, piecewise-linear
// interpolants on a dyadic knot ladder for path models. false means "not certified".
bool certify_enlarged_ball(const GaussianModel& model, const NormSpec& norm, const Path& x, double eps, double radius);

struct LipschitzReport {
  VerifierReport report;
  double phi_eps = 0.0;
  double phi_two_eps = 0.0;
  int n_pairs = 0;
  int n_certified = 0;
  int n_violations = 0;
  double max_ratio = 0.0;  // max |Delta Psi| / (sqrt(phi(eps)) |h|_mu) over certified pairs
};

// Psi(x) = log mu(B(x, 2 eps)); checks |Psi(x + h) - Psi(x)| <= 8 sqrt(phi(eps)) |h|_mu on
// pairs with x, x + h certified in eps B + 3 sqrt(phi(eps)) B_mu. Throws GateError unless
// phi(2 eps) >= -log Phi(-3).
LipschitzReport lipschitz_probe(const GaussianModel& model, const NormSpec& norm, double eps, int n_pairs,
                                const std::vector<double>& shift_magnitudes, const EstimatorOptions& opts,
                                const RandomStream& stream);

// A random RKHS element with |h|_mu = magnitude (few smooth modes for path models).
CmShift random_shift(const GaussianModel& model, double magnitude, RandomStream& stream);

// Set for the Gaussian shift inequality: a ball B(center, eps), or the half-space
// {y : <g, y>_mu <= level} with |g|_mu = 1.
struct SetDescriptor {
  enum class Kind { ball, half_space } kind = Kind::ball;
  Path center;
  double eps = 1.0;
  NormSpec norm;
  Path direction;
  double level = 0.0;

  static SetDescriptor ball(Path center, double eps, NormSpec norm);
  static SetDescriptor half_space(const GaussianModel& model, Path direction, double level);
};

struct ShiftReport {
  VerifierReport report;
  ProbEstimate mass;          // mu(A)
  ProbEstimate shifted_mass;  // mu(A + h)
  double lower = 0.0;         // Phi(Phi^{-1}(mu(A)) - |h|)
  double upper = 0.0;         // Phi(Phi^{-1}(mu(A)) + |h|)
};

// Phi(Phi^{-1}(mu(A)) - |h|) <= mu(A + h) <= Phi(Phi^{-1}(mu(A)) + |h|). Half-spaces are
// evaluated in closed form; balls use the estimator in opts, and the shifted ball is
// cross-checked with Cameron-Martin reweighting.
ShiftReport shift_inequality_check(const GaussianModel& model, const SetDescriptor& set, const CmShift& shift,
                                   const EstimatorOptions& opts, const RandomStream& stream);

struct EnlargedBallReport {
  VerifierReport report;
  double phi = 0.0;
  double radius = 0.0;  // M = 3 sqrt(phi(eps))
  long n_samples = 0;
  long n_uncertified = 0;
  Interval uncertified_ci;
};

// Conservative Monte-Carlo bound on mu((eps B + M B_mu)^c) against exp(-phi(eps)).
EnlargedBallReport verify_enlarged_ball(const GaussianModel& model, const NormSpec& norm, double eps, long n_samples,
                                        const EstimatorOptions& opts, const RandomStream& stream);

}  // namespace smallball
