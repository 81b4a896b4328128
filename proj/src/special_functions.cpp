#include "smallball/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "smallball/errors.hpp"

namespace smallball {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;
constexpr double kSeriesTolerance = 1e-15;
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_tail(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // Mills ratio expansion for the far left tail.
  const double z2 = x * x;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) + std::log(series);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal_quantile: p must lie in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

double log_sup_brownian_small_ball(double eps) {
  if (!(eps > 0.0)) throw DomainError("log_sup_brownian_small_ball: eps must be positive");
  if (eps < 1.0) {
    // Eigenfunction (theta) series, written relative to its leading term.
    const double a = kPi * kPi / (8.0 * eps * eps);
    double correction = 1.0;
    for (int k = 1;; ++k) {
      const double odd = 2.0 * k + 1.0;
      const double term = std::exp(-(odd * odd - 1.0) * a) / odd;
      correction += (k % 2 == 0 ? term : -term);
      if (term < kSeriesTolerance * correction) break;
    }
    return std::log(4.0 / kPi) - a + std::log(correction);
  }
  // Reflection series for the exit probability: 4 sum_k (-1)^k Ups((2k+1) eps).
  double exit = 0.0;
  for (int k = 0;; ++k) {
    const double term = 4.0 * normal_tail((2.0 * k + 1.0) * eps);
    exit += (k % 2 == 0 ? term : -term);
    if (term < kSeriesTolerance * exit || term == 0.0) break;
  }
  return std::log1p(-exit);
}

double log_sup_bridge_small_ball(double eps) {
  if (!(eps > 0.0)) throw DomainError("log_sup_bridge_small_ball: eps must be positive");
  if (eps < 1.0) {
    const double a = kPi * kPi / (8.0 * eps * eps);
    double correction = 1.0;
    for (int k = 2;; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-(odd * odd - 1.0) * a);
      correction += term;
      if (term < kSeriesTolerance * correction) break;
    }
    return std::log(std::sqrt(2.0 * kPi) / eps) - a + std::log(correction);
  }
  double exit = 0.0;
  for (int k = 1;; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * eps * eps);
    exit += (k % 2 == 1 ? term : -term);
    if (term < kSeriesTolerance * exit || term == 0.0) break;
  }
  return std::log1p(-exit);
}

double normal_abs_moment(double m) {
  if (!(m > -1.0)) throw DomainError("normal_abs_moment: order must exceed -1");
  return std::exp(0.5 * m * std::log(2.0) + std::lgamma(0.5 * (m + 1.0)) - 0.5 * std::log(kPi));
}

}  // namespace smallball
