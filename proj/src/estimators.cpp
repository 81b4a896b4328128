#include "smallball/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smallball/errors.hpp"
#include "smallball/parallel.hpp"
#include "smallball/special_functions.hpp"
#include "smallball/splitting.hpp"
#include "smallball/stats.hpp"

namespace smallball {

namespace {

constexpr long kBlockSize = 8192;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool whole_interval(const NormSpec& norm, const GaussianModel& model) {
  return norm.a == 0.0 && (!std::isfinite(norm.b) || std::abs(norm.b - model.horizon()) <= 1e-12 * model.horizon());
}

// log(2 Phi(x) - 1) for x > 0.
double log_central_mass(double x) {
  const double z = x / std::sqrt(2.0);
  return x < 1.0 ? std::log(std::erf(z)) : std::log1p(-std::erfc(z));
}

// log(Phi(b) - Phi(a)) for a < b.
double log_interval_mass(double a, double b) {
  if (a + b > 0.0) {
    // Mirror to the left tail where log_normal_cdf is accurate.
    const double lo = -b, hi = -a;
    a = lo;
    b = hi;
  }
  const double lb = log_normal_cdf(b);
  const double la = log_normal_cdf(a);
  return lb + std::log1p(-std::exp(la - lb));
}

ProbEstimate from_hits(long hits, long n, Method method) {
  ProbEstimate e;
  e.n_samples = n;
  e.method = method;
  if (hits == 0) {
    e.log_prob = std::log(3.0 / static_cast<double>(n));
    e.stderr_log = kInf;
    e.upper_bound = true;
    return e;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  e.log_prob = std::log(p);
  e.stderr_log = std::sqrt((1.0 - p) / static_cast<double>(hits));
  return e;
}

bool lazy_sup_walk(const GaussianModel& model, const NormSpec& norm) {
  return model.kind() == ModelKind::wiener && model.dim() == 1 && norm.kind == NormKind::sup && whole_interval(norm, model);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::analytic: return "analytic";
    case Method::mc: return "mc";
    case Method::splitting: return "splitting";
    case Method::cm_reweighted: return "cm_reweighted";
    case Method::transfer: return "transfer";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::analytic, Method::mc, Method::splitting, Method::cm_reweighted, Method::transfer})
    if (method_name(m) == name) return m;
  throw ConfigError("unknown estimator '" + name + "'");
}

double combined_stderr(const ProbEstimate& a, const ProbEstimate& b) {
  return std::hypot(a.stderr_log, b.stderr_log);
}

const ProbEstimate& SBFCurve::at(double eps) const {
  for (std::size_t i = 0; i < eps_grid.size(); ++i)
    if (std::abs(eps_grid[i] - eps) <= 1e-12 * eps) return phi[i];
  throw RangeError("SBF curve has no grid point at the requested eps");
}

bool SBFCurve::contains(double eps) const {
  return std::any_of(eps_grid.begin(), eps_grid.end(), [&](double e) { return std::abs(e - eps) <= 1e-12 * eps; });
}

std::optional<ProbEstimate> sbf_analytic(const GaussianModel& model, const NormSpec& norm, double eps) {
  if (!(eps > 0.0)) throw DomainError("sbf_analytic: eps must be positive");
  ProbEstimate e;
  switch (model.kind()) {
    case ModelKind::scalar:
      if (norm.kind == NormKind::hoelder) return std::nullopt;
      e.log_prob = log_central_mass(eps / model.sigma());
      return e;
    case ModelKind::finite_spectrum:
      if (norm.kind != NormKind::sup && model.lambdas().size() > 1) return std::nullopt;
      if (norm.kind == NormKind::hoelder) return std::nullopt;
      e.log_prob = 0.0;
      for (Eigen::Index k = 0; k < model.lambdas().size(); ++k) e.log_prob += log_central_mass(eps / std::sqrt(model.lambdas()[k]));
      return e;
    case ModelKind::wiener:
      if (model.dim() != 1 || norm.kind != NormKind::sup || !whole_interval(norm, model)) return std::nullopt;
      e.log_prob = log_sup_brownian_small_ball(eps / std::sqrt(model.horizon()));
      return e;
    case ModelKind::brownian_bridge:
      if (norm.kind != NormKind::sup || !whole_interval(norm, model)) return std::nullopt;
      e.log_prob = log_sup_bridge_small_ball(eps);
      return e;
  }
  return std::nullopt;
}

std::optional<ProbEstimate> ball_prob_analytic(const GaussianModel& model, const NormSpec& norm, const Path& center,
                                               double eps) {
  if (!(eps > 0.0)) throw DomainError("ball_prob_analytic: eps must be positive");
  model.check_shape(center);
  if (center.values.isZero(0.0)) return sbf_analytic(model, norm, eps);
  ProbEstimate e;
  switch (model.kind()) {
    case ModelKind::scalar: {
      if (norm.kind == NormKind::hoelder) return std::nullopt;
      const double x = center.values(0, 0), s = model.sigma();
      e.log_prob = log_interval_mass((x - eps) / s, (x + eps) / s);
      return e;
    }
    case ModelKind::finite_spectrum: {
      if (norm.kind != NormKind::sup && model.lambdas().size() > 1) return std::nullopt;
      if (norm.kind == NormKind::hoelder) return std::nullopt;
      e.log_prob = 0.0;
      for (Eigen::Index k = 0; k < model.lambdas().size(); ++k) {
        const double s = std::sqrt(model.lambdas()[k]), x = center.values(k, 0);
        e.log_prob += log_interval_mass((x - eps) / s, (x + eps) / s);
      }
      return e;
    }
    default:
      return std::nullopt;
  }
}

ProbEstimate ball_prob_mc(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps, long n_samples,
                          const RandomStream& stream) {
  if (!(eps > 0.0)) throw DomainError("ball_prob_mc: eps must be positive");
  if (n_samples < 1) throw ConfigError("ball_prob_mc: n_samples must be >= 1");
  model.check_shape(center);
  norm.validate();

  const long blocks = (n_samples + kBlockSize - 1) / kBlockSize;
  std::vector<long> hits(static_cast<std::size_t>(blocks), 0);
  const bool lazy = lazy_sup_walk(model, norm);
  const Eigen::Index nodes = model.n_nodes();
  const double step = std::sqrt(model.dt());
  const double* c = center.values.data();

  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    RandomStream s = stream.child(b);
    const long begin = static_cast<long>(b) * kBlockSize;
    const long count = std::min(kBlockSize, n_samples - begin);
    long local = 0;
    if (lazy) {
      if (std::abs(c[0]) > eps) return;
      for (long i = 0; i < count; ++i) {
        double x = 0.0;
        bool inside = true;
        for (Eigen::Index k = 1; k < nodes; ++k) {
          x += step * s.normal();
          if (std::abs(x - c[k]) > eps) {
            inside = false;
            break;
          }
        }
        local += inside ? 1 : 0;
      }
    } else {
      Path draw = model.zero_path();
      for (long i = 0; i < count; ++i) {
        sample_into(model, s, draw.values.data());
        if (distance(draw, center, norm) <= eps) ++local;
      }
    }
    hits[b] = local;
  });

  long total = 0;
  for (long h : hits) total += h;
  return from_hits(total, n_samples, Method::mc);
}

ProbEstimate ball_prob_cm(const GaussianModel& model, const NormSpec& norm, const CmShift& shift, double eps,
                          long n_samples, const RandomStream& stream) {
  if (!(eps > 0.0)) throw DomainError("ball_prob_cm: eps must be positive");
  if (n_samples < 2) throw ConfigError("ball_prob_cm: n_samples must be >= 2");
  if (!std::isfinite(shift.rkhs_norm)) throw DomainError("ball_prob_cm: shift has infinite RKHS norm");
  const CmShift reverse{-1.0 * shift.h, shift.rkhs_norm};
  const long blocks = (n_samples + kBlockSize - 1) / kBlockSize;
  std::vector<double> sum(static_cast<std::size_t>(blocks), 0.0), sum_sq(static_cast<std::size_t>(blocks), 0.0);
  std::vector<long> hits(static_cast<std::size_t>(blocks), 0);
  const Path zero = model.zero_path();

  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    RandomStream s = stream.child(b);
    const long count = std::min(kBlockSize, n_samples - static_cast<long>(b) * kBlockSize);
    Path draw = model.zero_path();
    for (long i = 0; i < count; ++i) {
      sample_into(model, s, draw.values.data());
      if (distance(draw, zero, norm) > eps) continue;
      const double w = std::exp(cm_log_weight(model, reverse, draw));
      sum[b] += w;
      sum_sq[b] += w * w;
      ++hits[b];
    }
  });

  double total = 0.0, total_sq = 0.0;
  long total_hits = 0;
  for (long b = 0; b < blocks; ++b) {
    total += sum[static_cast<std::size_t>(b)];
    total_sq += sum_sq[static_cast<std::size_t>(b)];
    total_hits += hits[static_cast<std::size_t>(b)];
  }
  if (total_hits == 0) return from_hits(0, n_samples, Method::cm_reweighted);
  const double n = static_cast<double>(n_samples);
  const double m = total / n;
  const double var = std::max(0.0, total_sq / n - m * m) * n / (n - 1.0);
  ProbEstimate e;
  e.method = Method::cm_reweighted;
  e.n_samples = n_samples;
  e.log_prob = std::log(m);
  e.stderr_log = std::sqrt(var / n) / m;
  return e;
}

bool transfer_supported(const GaussianModel& model, const NormSpec& norm) { return lazy_sup_walk(model, norm); }

ProbEstimate ball_prob_transfer(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                                const TransferOptions& opts) {
  if (!transfer_supported(model, norm))
    throw ConfigError("transfer estimator needs the one-dimensional Wiener model with the sup norm over the whole horizon");
  model.check_shape(center);
  if (!(eps > 0.0)) throw DomainError("ball_prob_transfer: eps must be positive");
  if (std::abs(center.values(0, 0)) > eps) throw DomainError("ball_prob_transfer: ball does not contain the start point");
  const TransferResult r = tube_log_prob(center.values.col(0), model.dt(), eps, 0.0, opts);
  ProbEstimate e;
  e.method = Method::transfer;
  e.log_prob = r.log_value;
  e.stderr_log = r.error;
  return e;
}

ProbEstimate ball_prob(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                       const EstimatorOptions& opts, const RandomStream& stream) {
  switch (opts.method) {
    case Method::analytic: {
      auto e = ball_prob_analytic(model, norm, center, eps);
      if (!e) throw ConfigError("no closed form for " + model.describe() + " with norm " + norm.describe());
      return *e;
    }
    case Method::mc: return ball_prob_mc(model, norm, center, eps, opts.n_samples, stream);
    case Method::cm_reweighted:
      return ball_prob_cm(model, norm, make_shift(model, center), eps, opts.n_samples, stream);
    case Method::splitting: return ball_prob_splitting(model, norm, center, eps, opts.splitting, stream).estimate;
    case Method::transfer: return ball_prob_transfer(model, norm, center, eps, opts.transfer);
  }
  throw ConfigError("unknown estimator");
}

SBFCurve sbf_curve(const GaussianModel& model, const NormSpec& norm, const std::vector<double>& eps_grid,
                   const EstimatorOptions& opts, const RandomStream& stream) {
  if (eps_grid.empty()) throw ConfigError("sbf_curve: empty eps grid");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] < eps_grid[i - 1])) throw ConfigError("sbf_curve: eps grid must be strictly decreasing");
  SBFCurve curve;
  curve.eps_grid = eps_grid;
  const Path zero = model.zero_path();
  for (std::size_t i = 0; i < eps_grid.size(); ++i)
    curve.phi.push_back(ball_prob(model, norm, zero, eps_grid[i], opts, stream.child(i)));
  return curve;
}

Extrapolation extrapolate_in_step(const std::vector<double>& dt, const std::vector<double>& values,
                                  const std::vector<double>& stderrs) {
  const auto n = static_cast<Eigen::Index>(dt.size());
  if (n < 2 || values.size() != dt.size() || stderrs.size() != dt.size())
    throw ShapeError("extrapolate_in_step: need matching series of length >= 2");
  Eigen::VectorXd x(n), y(n), w(n);
  bool weighted = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = std::sqrt(dt[static_cast<std::size_t>(i)]);
    y[i] = values[static_cast<std::size_t>(i)];
    const double se = stderrs[static_cast<std::size_t>(i)];
    if (!(se > 0.0) || !std::isfinite(se)) weighted = false;
    w[i] = 1.0 / (se * se);
  }
  const LinearFit fit = weighted ? linear_fit(x, y, w) : linear_fit(x, y);
  return {fit.intercept, fit.intercept_stderr, fit.slope};
}

}  // namespace smallball
