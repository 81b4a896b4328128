#pragma once

// Reference computations that share no code with the library: std::erfc for the normal
// law, direct series, plain quadrature and a std::mt19937_64 simulation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// -log P(|X| <= eps) for X ~ N(0, sigma^2).
inline double scalar_phi(double eps, double sigma = 1.0) { return -std::log(2.0 * normal_cdf(eps / sigma) - 1.0); }

// -log P(sup_[0,1] |W| <= eps), alternating theta series.
inline double brownian_sup_phi(double eps) {
  double sum = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = std::exp(-m * m * std::numbers::pi * std::numbers::pi / (8.0 * eps * eps)) / m;
    sum += (k % 2 == 0 ? term : -term);
    if (term < 1e-300) break;
  }
  return -std::log(4.0 / std::numbers::pi * sum);
}

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// P(ell_eps(X) <= t) for the scalar model: ell is even and increasing in |x|, so the
// event is |X| <= x_t with ell(x_t) = t.
inline double scalar_ell_cdf(double t, double eps, double sigma = 1.0) {
  auto ell = [&](double x) { return -std::log(normal_cdf((x + eps) / sigma) - normal_cdf((x - eps) / sigma)); };
  if (t <= ell(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (ell(hi) < t) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ell(mid) < t ? lo : hi) = mid;
  }
  return 2.0 * normal_cdf(0.5 * (lo + hi) / sigma) - 1.0;
}

// (E min_{i<=n} |X - Y_i|^s)^{1/s} for i.i.d. standard normals X, Y_1..Y_n by quadrature:
// E Z^s = int phi(x) int_0^inf s z^{s-1} P(|x - Y| > z)^n dz dx.
inline double scalar_distortion(int n, double s) {
  auto inner = [&](double x) {
    return simpson(
        [&](double z) {
          if (z == 0.0) return s == 1.0 ? 1.0 : 0.0;
          const double tail = 1.0 - (normal_cdf(x + z) - normal_cdf(x - z));
          return s * std::pow(z, s - 1.0) * std::pow(tail, n);
        },
        0.0, 14.0, 1400);
  };
  const double m = simpson([&](double x) { return normal_pdf(x) * inner(x); }, -9.0, 9.0, 360);
  return std::pow(m, 1.0 / s);
}

// Exit-rate of Brownian motion (generator 1/2 Laplacian) from the unit ball of R^d,
// estimated from the survival curve of a simulated population started at the origin.
// Between steps a half-space bridge correction kills the path with probability
// exp(-2 a b / dt), a and b the distances to the sphere at both ends.
inline double exit_rate(int d, int n_paths, double dt, double t1, double t2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  const double sd = std::sqrt(dt);
  const int s1 = static_cast<int>(std::lround(t1 / dt)), s2 = static_cast<int>(std::lround(t2 / dt));
  long alive1 = 0, alive2 = 0;
  for (int p = 0; p < n_paths; ++p) {
    double x[3] = {0.0, 0.0, 0.0};
    double dist = 1.0;
    int step = 0;
    bool alive = true;
    for (; step < s2 && alive; ++step) {
      double r2 = 0.0;
      for (int j = 0; j < d; ++j) {
        x[j] += sd * gauss(rng);
        r2 += x[j] * x[j];
      }
      const double nd = 1.0 - std::sqrt(r2);
      if (nd <= 0.0 || unif(rng) < std::exp(-2.0 * dist * nd / dt)) alive = false;
      dist = nd;
      if (alive && step + 1 == s1) ++alive1;
    }
    if (alive) ++alive2;
  }
  return std::log(static_cast<double>(alive1) / static_cast<double>(alive2)) / (t2 - t1);
}

}  // namespace oracle
