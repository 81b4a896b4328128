#include "smallball/rsbf_lab.hpp"

#include <algorithm>
#include <cmath>

#include "smallball/errors.hpp"
#include "smallball/parallel.hpp"
#include "smallball/special_functions.hpp"

namespace smallball {

std::vector<RSBFSample> sample_rsbf(const GaussianModel& model, const NormSpec& norm, const std::vector<double>& eps_grid,
                                    int n_centers, const EstimatorOptions& opts, const RandomStream& stream) {
  if (n_centers < 2) throw ConfigError("sample_rsbf: need at least two centers");
  return sample_rsbf_at(model, norm, sample(model, stream.child(0), n_centers), eps_grid, opts, stream);
}

std::vector<RSBFSample> sample_rsbf_at(const GaussianModel& model, const NormSpec& norm, const std::vector<Path>& centers,
                                       const std::vector<double>& eps_grid, const EstimatorOptions& opts,
                                       const RandomStream& stream) {
  if (eps_grid.empty()) throw ConfigError("sample_rsbf: empty eps grid");
  if (centers.size() < 2) throw ConfigError("sample_rsbf: need at least two centers");
  const std::size_t m = eps_grid.size();
  std::vector<RSBFSample> out(centers.size() * m);
  const RandomStream inner = stream.child(1);
  parallel_for(centers.size(), [&](std::size_t i) {
    const RandomStream s = inner.child(i);
    for (std::size_t j = 0; j < m; ++j) {
      RSBFSample& r = out[i * m + j];
      r.center_id = static_cast<int>(i);
      r.eps = eps_grid[j];
      r.ell_hat = ball_prob(model, norm, centers[i], eps_grid[j], opts, s.child(j));
    }
  });
  return out;
}

std::size_t GaugeCurve::index_of(double eps) const {
  for (std::size_t i = 0; i < eps_grid.size(); ++i)
    if (std::abs(eps_grid[i] - eps) <= 1e-12 * eps) return i;
  throw RangeError("gauge curve has no grid point at the requested eps");
}

GaugeCurve gauge_stats(const std::vector<RSBFSample>& samples, const GaugeOptions& opts) {
  if (samples.empty()) throw DataError("gauge_stats: no samples");
  GaugeCurve g;
  for (const auto& s : samples)
    if (std::none_of(g.eps_grid.begin(), g.eps_grid.end(), [&](double e) { return e == s.eps; })) g.eps_grid.push_back(s.eps);
  std::sort(g.eps_grid.begin(), g.eps_grid.end(), std::greater<>());
  const std::size_t m = g.eps_grid.size();
  g.values.assign(m, {});
  g.stderrs.assign(m, {});
  g.n_bounded.assign(m, 0);
  for (const auto& s : samples) {
    const std::size_t j = g.index_of(s.eps);
    g.values[j].push_back(s.ell());
    g.stderrs[j].push_back(std::isfinite(s.ell_hat.stderr_log) ? s.ell_hat.stderr_log : 0.0);
    if (s.bounded()) ++g.n_bounded[j];
  }
  g.n_centers = static_cast<int>(g.values.front().size());
  for (const auto& v : g.values)
    if (static_cast<int>(v.size()) != g.n_centers) throw DataError("gauge_stats: unequal number of centers per eps");
  g.low_power = g.n_centers < 30;
  g.moments = opts.moments;
  g.lp_moments.assign(opts.moments.size(), std::vector<double>(m));

  const RandomStream boot(opts.seed, 0x6a09e667ULL);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& v = g.values[j];
    double inner_var = 0.0;
    for (double se : g.stderrs[j]) inner_var += se * se;
    const double n = static_cast<double>(v.size());
    g.median.push_back(lower_median(v));
    g.mean.push_back(mean(v));
    g.stddev.push_back(stddev(v));
    g.mean_stderr.push_back(std::sqrt(std::pow(standard_error(v), 2) + inner_var / (n * n)));
    g.iqr.push_back(interquartile_range(v));
    g.dispersion.push_back(g.median.back() > 0.0 ? g.iqr.back() / g.median.back() : 0.0);
    if (v.size() >= 2) {
      g.median_ci.push_back(bootstrap_interval(v, [](const auto& x) { return lower_median(x); }, opts.bootstrap, boot.child(3 * j), opts.level));
      g.mean_ci.push_back(bootstrap_interval(v, [](const auto& x) { return mean(x); }, opts.bootstrap, boot.child(3 * j + 1), opts.level));
      g.dispersion_ci.push_back(bootstrap_interval(
          v,
          [](const auto& x) {
            const double med = lower_median(x);
            return med > 0.0 ? interquartile_range(x) / med : 0.0;
          },
          opts.bootstrap, boot.child(3 * j + 2), opts.level));
    } else {
      g.median_ci.push_back({g.median.back(), g.median.back()});
      g.mean_ci.push_back({g.mean.back(), g.mean.back()});
      g.dispersion_ci.push_back({g.dispersion.back(), g.dispersion.back()});
    }
    for (std::size_t k = 0; k < opts.moments.size(); ++k) {
      const double p = opts.moments[k];
      double acc = 0.0;
      for (double x : v) acc += std::pow(std::max(0.0, x), p);
      g.lp_moments[k][j] = std::pow(acc / n, 1.0 / p);
    }
  }
  return g;
}

double moment_bound_from_phi(double phi_half, double p) {
  if (!(p >= 1.0)) throw DomainError("moment bound needs p >= 1");
  const double z = std::pow(normal_abs_moment(2.0 * p), 1.0 / (2.0 * p));
  const double r = std::sqrt(2.0 * phi_half) + z;
  return phi_half + 0.5 * r * r;
}

void VerifierConfig::validate() const {
  if (!(delta > 0.0)) throw ConfigError("verifier slack must be positive");
  if (!(nu >= 1.0)) throw ConfigError("regularity doubling constant must be >= 1");
  if (!(nu_tilde > 1.0)) throw ConfigError("growth doubling constant must exceed 1");
  if (!(nu1 > 0.0) || !(confidence > 0.0)) throw ConfigError("verifier constants must be positive");
}

}  // namespace smallball
