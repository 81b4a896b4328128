#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "smallball/gaussian_models.hpp"
#include "smallball/norms.hpp"
#include "smallball/rsbf_lab.hpp"
#include "smallball/stats.hpp"
#include "smallball/verifiers.hpp"

namespace smallball {

// floor(e^r) with a relative guard so that r = log n maps back to n.
long codebook_size(double r);

// n i.i.d. draws from the model; entry i uses stream.child(i). Stored column-wise, one
// column per codeword laid out like Path::values.
struct Codebook {
  Eigen::MatrixXd entries;
  long n = 0;
  double r = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Eigen::Index nodes = 0;
  int dim = 1;
  double dt = 1.0;
  bool timed = true;

  Path entry(long i) const;
};

Codebook build_codebook(const GaussianModel& model, double r, const RandomStream& stream,
                        double memory_budget_bytes = 2.0e9);
// Codebook with exactly n entries (r = log n).
Codebook build_codebook_n(const GaussianModel& model, long n, const RandomStream& stream,
                          double memory_budget_bytes = 2.0e9);

struct Nearest {
  long index = -1;
  double distance = 0.0;
};

// Exhaustive scan. For the sup norm and for L^p over the whole path, partial maxima /
// partial sums abandon a codeword once it cannot beat the current best.
Nearest nearest_codeword(const Codebook& book, const NormSpec& norm, const Path& x);

struct QuantizationResult {
  double r = 0.0;
  double s = 0.0;
  long n = 0;
  double D_hat = 0.0;
  double stderr_D = 0.0;
  long n_test = 0;
  std::vector<double> z_levels = {0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<double> z_quantiles;
  std::vector<double> z;  // Z(r) per test source, in source order
};

// D(r, s) = (E min_i ||X - Y_i||^s)^{1/s}. Sources come in batches of batch_size, each with a
// fresh codebook (batch b uses stream.child(b)); the standard error uses batch means.
QuantizationResult distortion(const GaussianModel& model, const NormSpec& norm, double r, double s, long n_test,
                              const RandomStream& stream, long batch_size = 64);

// Distortion against one fixed codebook.
QuantizationResult distortion_fixed(const GaussianModel& model, const NormSpec& norm, const Codebook& book, double s,
                                    long n_test, const RandomStream& stream);

// Summary of D from precomputed Z values.
QuantizationResult summarize_distortion(double r, long n, double s, std::vector<double> z, long batch_size);

// Monotone inverse r -> eps of a decreasing curve eps -> value (isotonic projection, then
// log-log interpolation). Throws DataError when the projected curve is not strictly
// monotone.
LogLogInterpolant invert_curve(const std::vector<double>& eps, const std::vector<double>& values);
LogLogInterpolant invert_gauge(const GaugeCurve& gauge);
LogLogInterpolant invert_gauge(const SBFCurve& sbf);

struct CoverageResult {
  double r = 0.0;
  double kappa = 0.0;
  double center = 0.0;  // gauge inverse at r
  long hits = 0;
  long n_test = 0;
  double rate = 0.0;
  Interval ci;
};

// Fraction of sources with Z(r) in [(1 - kappa) g(r), (1 + kappa) g(r)], g the gauge
// inverse.
CoverageResult coverage_event_rate(const GaussianModel& model, const NormSpec& norm,
                                   const std::function<double(double)>& gauge_inverse, double r, double kappa,
                                   long n_test, const RandomStream& stream);
CoverageResult coverage_from_z(const std::vector<double>& z, double r, double g, double kappa);

// Coverage rates nondecreasing along increasing r, within the Wilson intervals.
VerifierReport check_coverage_trend(std::vector<CoverageResult> rates);

// Ratios D(r, s) / g(r) approach 1 along the r ladder and the last lies in
// [1 - band, 1 + band]. Rows are informational when growth_hypothesis is false.
VerifierReport verify_distortion_asymptotics(const std::vector<QuantizationResult>& results,
                                             const std::function<double(double)>& gauge_inverse,
                                             bool growth_hypothesis, const VerifierConfig& cfg, double band = 0.3);

// D(r, s) <= (1 + delta) 2 phi^{-1}(r / 2).
VerifierReport verify_distortion_upper_bound(const std::vector<QuantizationResult>& results,
                                             const std::function<double(double)>& sbf_inverse, bool growth_hypothesis,
                                             const VerifierConfig& cfg);

}  // namespace smallball
