#pragma once

#include <limits>
#include <string>
#include <vector>

#include "smallball/gaussian_models.hpp"

namespace smallball {

enum class NormKind { sup, lp, hoelder };

// A norm or seminorm restricted to [a, b]. b = +infinity means "up to the end of the
// path". Vector (untimed) paths ignore the interval: sup is the max-coordinate norm and
// lp the l^p norm of the coordinates; Hoelder needs time structure.
struct NormSpec {
  NormKind kind = NormKind::sup;
  double p = 2.0;
  double beta = 0.0;
  double a = 0.0;
  double b = std::numeric_limits<double>::infinity();

  static NormSpec sup_norm();
  static NormSpec lp_norm(double p);
  static NormSpec hoelder(double beta);
  NormSpec on(double a, double b) const;

  void validate() const;
  std::string describe() const;
};

// Exponent of ||f(c .)||_{I/c} = c^index ||f||_I: 0 for sup, -1/p for L^p, beta for Hoelder.
double self_similarity_index(const NormSpec& spec);
// Superadditivity exponent: p for L^p, +infinity for sup and Hoelder.
double superadditivity_exponent(const NormSpec& spec);
// Small-deviation rate gamma = 1 / (1/2 - beta - 1/p), with 1/p = 0 for sup; +infinity if
// the denominator is not positive.
double small_ball_rate(const NormSpec& spec);
// q = p (1/2 - beta) for the soft functional; requires a finite p.
double soft_exponent(const NormSpec& spec);

// Resolved node range and interpolated endpoints of [a, b] on a grid.
struct IntervalView {
  double a = 0.0;
  double b = 0.0;
  Eigen::Index first = 0;  // first node with t >= a
  Eigen::Index last = 0;   // last node with t <= b
};

IntervalView resolve_interval(const Path& path, const NormSpec& spec);

double eval_norm(const Path& path, const NormSpec& spec);
// ||x - y|| without materializing the difference for the sup norm.
double distance(const Path& x, const Path& y, const NormSpec& spec);

// Raw column-major data laid out like Path::values with the interval covering the whole
// path. Used by inner Monte-Carlo loops.
double norm_of_raw(const double* values, Eigen::Index nodes, int dim, double dt, bool timed, const NormSpec& spec);

struct SelfSimilarityReport {
  double residual = 0.0;
  double measured_exponent = 0.0;
  double expected_exponent = 0.0;
};

// Compares ||f(c .)||_{I/c} with c^index ||f||_I. f(c .) is represented exactly by
// reusing the nodes with step dt / c.
SelfSimilarityReport check_self_similarity(const NormSpec& spec, const Path& path, double c);

struct SuperadditivityReport {
  bool holds = false;
  double slack = 0.0;  // ||f||_I - (sum_k ||f||_{I_k}^p)^{1/p}, max for p = infinity
};

// breakpoints must be strictly increasing inside the norm interval; the interval ends
// are added when missing.
SuperadditivityReport check_superadditivity(const NormSpec& spec, const Path& path, std::vector<double> breakpoints);

}  // namespace smallball
