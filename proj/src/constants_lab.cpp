#include "smallball/constants_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "smallball/errors.hpp"
#include "smallball/parallel.hpp"

namespace smallball {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::Index grid_index(const Path& w, double t) {
  if (!w.timed) throw ShapeError("flow shift needs a timed path");
  const double steps = t / w.dt;
  const long k = std::lround(steps);
  if (t < 0.0 || std::abs(steps - static_cast<double>(k)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("flow shift: t must be a grid time");
  if (k >= w.n_nodes() - 1) throw RangeError("flow shift: t must lie before the horizon");
  return static_cast<Eigen::Index>(k);
}

double score(const ProbEstimate& e) { return e.upper_bound ? kNegInf : e.log_prob; }

double noise(const ProbEstimate& e) { return std::isfinite(e.stderr_log) ? e.stderr_log : 0.0; }

// 9-point scan with a three-point unimodality spot check, then golden section between
// the neighbours of the best scan point.
template <class F>
std::pair<double, ProbEstimate> search_1d(F&& f, double lo, double hi) {
  constexpr int kScan = 9;
  std::vector<double> xs(kScan);
  std::vector<ProbEstimate> vs(kScan);
  for (int i = 0; i < kScan; ++i) {
    xs[i] = lo + (hi - lo) * i / (kScan - 1);
    vs[i] = f(xs[i]);
  }
  int best = 0;
  for (int i = 1; i < kScan; ++i)
    if (score(vs[i]) > score(vs[best])) best = i;
  for (int i = 0; i + 1 < kScan; ++i) {
    // Toward the maximum the profile may not drop, away from it it may not rise.
    const ProbEstimate& outer = i < best ? vs[i] : vs[i + 1];
    const ProbEstimate& inner = i < best ? vs[i + 1] : vs[i];
    if (score(outer) == kNegInf) continue;
    const double tol = 3.0 * std::hypot(noise(outer), noise(inner)) + 1e-9;
    if (score(inner) == kNegInf || score(outer) > score(inner) + tol)
      throw DiagnosticError("tilde_rsbf: starting-point profile is not unimodal");
  }
  if (score(vs[best]) == kNegInf) return {0.5 * (lo + hi), vs[kScan / 2]};

  double a = xs[std::max(0, best - 1)], b = xs[std::min(kScan - 1, best + 1)];
  double bx = xs[best];
  ProbEstimate bv = vs[best];
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  ProbEstimate fc = f(c), fd = f(d);
  for (int it = 0; it < 20; ++it) {
    if (score(fc) >= score(fd)) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  if (score(fc) > score(bv)) bx = c, bv = fc;
  if (score(fd) > score(bv)) bx = d, bv = fd;
  return {bx, bv};
}

void require_wiener_1d(const GaussianModel& model, const char* what) {
  if (model.kind() != ModelKind::wiener || model.dim() != 1)
    throw ConfigError(std::string(what) + ": needs a one-dimensional Wiener model");
}

GaussianModel series_base(const GaussianModel& model, const SeriesOptions& opts, const char* what) {
  require_wiener_1d(model, what);
  if (opts.a_grid.empty()) throw ConfigError(std::string(what) + ": empty a grid");
  for (std::size_t k = 0; k < opts.a_grid.size(); ++k) {
    if (!(opts.a_grid[k] >= 1.0 && opts.a_grid[k] <= 16.0))
      throw ConfigError(std::string(what) + ": a grid must lie in [1, 16]");
    if (k > 0 && !(opts.a_grid[k] > opts.a_grid[k - 1]))
      throw ConfigError(std::string(what) + ": a grid must be increasing");
  }
  if (opts.n_centers < 2) throw ConfigError(std::string(what) + ": need at least two centers");
  if (opts.dt < 0.0) throw ConfigError(std::string(what) + ": negative grid step");
  if (opts.dt == 0.0) return model;
  const double n = 1.0 / opts.dt;
  if (std::abs(n - std::round(n)) > 1e-9 * n) throw ConfigError(std::string(what) + ": 1 / dt must be an integer");
  return GaussianModel::wiener(static_cast<int>(std::lround(n)));
}

// Path functional on a timed d = 1 path: -lbar for hard, Lambda for soft (both as log
// values), with the quadrature error.
TransferResult path_functional(SeriesKind kind, const Path& w, double p, const TransferOptions& opts) {
  if (kind == SeriesKind::hard) return tube_log_prob_sup(w.values.col(0), w.dt, 1.0, opts);
  return soft_log_expectation_sup(w.values.col(0), w.dt, p, opts);
}

SubadditiveSeries run_series(SeriesKind kind, const GaussianModel& base, double p, const SeriesOptions& opts,
                             const RandomStream& stream) {
  SubadditiveSeries s;
  s.kind = kind;
  const double sign = kind == SeriesKind::hard ? -1.0 : 1.0;
  for (std::size_t k = 0; k < opts.a_grid.size(); ++k) {
    const GaussianModel m = base.with_horizon(opts.a_grid[k]);
    const std::vector<Path> paths = sample(m, stream.child(k), opts.n_centers);
    std::vector<TransferResult> res(paths.size());
    parallel_for(paths.size(), [&](std::size_t i) { res[i] = path_functional(kind, paths[i], p, opts.transfer); });
    if (std::any_of(res.begin(), res.end(), [](const auto& r) { return !std::isfinite(r.log_value); })) {
      s.partial = true;
      break;
    }
    std::vector<double> v(res.size());
    double err = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      v[i] = sign * res[i].log_value;
      err += res[i].error;
    }
    err /= static_cast<double>(res.size());
    s.a_grid.push_back(opts.a_grid[k]);
    s.values.push_back(mean(v));
    s.stderrs.push_back(std::hypot(standard_error(v), err));
    s.per_path.push_back(std::move(v));
  }
  const std::size_t m = s.values.size();
  if (m < 2) throw DataError("subadditive series: fewer than two usable a values");
  const std::size_t start = m >= 4 ? m / 2 : 0;
  const auto len = static_cast<Eigen::Index>(m - start);
  Eigen::VectorXd x(len), y(len), wt(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const std::size_t k = start + static_cast<std::size_t>(i);
    x[i] = s.a_grid[k];
    y[i] = s.values[k];
    wt[i] = 1.0 / std::max(1e-300, s.stderrs[k] * s.stderrs[k]);
  }
  const LinearFit fit = linear_fit(x, y, wt);
  s.slope = fit.slope;
  s.slope_stderr = fit.slope_stderr;
  s.intercept = fit.intercept;
  s.residual = fit.residual_rms;
  s.ratio_last = s.values.back() / s.a_grid.back();
  return s;
}

std::vector<double> auto_eps_grid(const GaussianModel& model, const NormSpec& norm) {
  auto phi = [&](double e) {
    const auto v = sbf_analytic(model, norm, e);
    if (!v) throw ConfigError("estimate_constant: eps_fit needs an explicit eps grid for this model");
    return v->phi();
  };
  auto solve = [&](double target) {
    double lo = std::log(1e-4), hi = std::log(1e4);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(std::exp(mid)) > target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
  };
  const double e_hi = solve(5.0), e_lo = solve(20.0);
  std::vector<double> grid(4);
  for (int i = 0; i < 4; ++i) grid[static_cast<std::size_t>(i)] = e_hi * std::pow(e_lo / e_hi, i / 3.0);
  return grid;
}

}  // namespace

Path FlowShift::apply(const Path& w) const {
  const Eigen::Index k = grid_index(w, t);
  Eigen::MatrixXd v = w.values.bottomRows(w.n_nodes() - k);
  v.rowwise() -= w.values.row(k);
  return Path::on_grid(std::move(v), w.dt);
}

Path flow_shift(const Path& w, double t) { return FlowShift{t}.apply(w); }

TildeResult tilde_rsbf(const GaussianModel& model, const NormSpec& norm, const Path& w, double eps,
                       const EstimatorOptions& opts, const RandomStream& stream) {
  if (model.kind() != ModelKind::wiener) throw ConfigError("tilde_rsbf: needs a Wiener model");
  if (model.dim() > 3) throw ConfigError("tilde_rsbf: dimension above 3 is unsupported");
  if (!(eps > 0.0)) throw DomainError("tilde_rsbf: eps must be positive");
  model.check_shape(w);
  norm.validate();
  const int d = model.dim();
  TildeResult out;
  out.x_star = Eigen::VectorXd::Zero(d);
  if (norm.kind == NormKind::hoelder) {
    out.estimate = ball_prob(model, norm, w, eps, opts, stream);
    return out;
  }
  if (opts.method == Method::transfer && transfer_supported(model, norm)) {
    const TransferResult r = tube_log_prob_sup(w.values.col(0), w.dt, eps, opts.transfer);
    out.estimate = {r.log_value, r.error, 0, Method::transfer, false};
    out.x_star[0] = r.x_star;
    return out;
  }
  const double reach = w.values.cwiseAbs().maxCoeff() + 2.0 * eps;
  auto eval = [&](const Eigen::VectorXd& x) {
    Path c = w;
    for (int j = 0; j < d; ++j) c.values.col(j).array() -= x[j];
    return ball_prob(model, norm, c, eps, opts, stream);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  ProbEstimate best = eval(x);
  for (int sweep = 0; sweep < (d == 1 ? 1 : 2); ++sweep) {
    for (int j = 0; j < d; ++j) {
      auto [xj, v] = search_1d(
          [&](double t) {
            Eigen::VectorXd y = x;
            y[j] = t;
            return eval(y);
          },
          -reach, reach);
      if (score(v) >= score(best)) {
        x[j] = xj;
        best = v;
      }
    }
  }
  out.estimate = best;
  out.x_star = x;
  return out;
}

std::string series_kind_name(SeriesKind k) { return k == SeriesKind::hard ? "hard" : "soft"; }

std::vector<double> SubadditiveSeries::ratios() const {
  std::vector<double> r(values.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = values[k] / a_grid[k];
  return r;
}

std::vector<double> SubadditiveSeries::ratio_stderrs() const {
  std::vector<double> r(stderrs.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = stderrs[k] / a_grid[k];
  return r;
}

SubadditiveSeries lambda_hard(const GaussianModel& model, const SeriesOptions& opts, const RandomStream& stream) {
  const GaussianModel base = series_base(model, opts, "lambda_hard");
  SubadditiveSeries s = run_series(SeriesKind::hard, base, 0.0, opts, stream);
  s.constant = s.slope;
  s.constant_stderr = s.slope_stderr;
  return s;
}

SubadditiveSeries lambda_soft(const GaussianModel& model, const NormSpec& norm, const SeriesOptions& opts,
                              const RandomStream& stream) {
  norm.validate();
  if (norm.kind != NormKind::lp) throw ConfigError("lambda_soft: needs an L^p norm");
  if (norm.a != 0.0 || std::isfinite(norm.b)) throw ConfigError("lambda_soft: the norm must cover the whole horizon");
  const double q = soft_exponent(norm);
  if (!(q > 1.0)) throw ConfigError("lambda_soft: soft exponent q must exceed 1");
  const GaussianModel base = series_base(model, opts, "lambda_soft");
  SubadditiveSeries s = run_series(SeriesKind::soft, base, norm.p, opts, stream);
  s.q = q;
  s.K = -s.slope;
  s.constant = soft_to_hard(s.K, q);
  s.constant_stderr = std::pow(s.K / q, 1.0 / (q - 1.0)) * s.slope_stderr;
  return s;
}

double soft_to_hard(double K, double q) {
  if (!(q > 1.0)) throw DomainError("soft_to_hard: q must exceed 1");
  if (!(K > 0.0)) throw DomainError("soft_to_hard: K must be positive");
  return (q - 1.0) * std::pow(K / q, q / (q - 1.0));
}

VerifierReport check_series_trend(const SubadditiveSeries& series, double confidence) {
  const bool hard = series.kind == SeriesKind::hard;
  VerifierReport rep{hard ? "Lambda(a)/a nondecreasing" : "Lambda_a/a nonincreasing", hard ? "fekete-hard" : "fekete-soft",
                     {}};
  const auto r = series.ratios();
  const auto se = series.ratio_stderrs();
  for (std::size_t k = 1; k < r.size(); ++k) {
    const double tol = confidence * std::hypot(se[k], se[k - 1]);
    if (hard)
      rep.add("ratio-step", series.a_grid[k], r[k - 1], r[k], tol);
    else
      rep.add("ratio-step", series.a_grid[k], r[k], r[k - 1], tol);
  }
  if (series.partial) rep.add_informational("partial", series.a_grid.back(), 1.0, 0.0, "a grid truncated");
  return rep;
}

SplitCheck check_split(const GaussianModel& model, SeriesKind kind, const NormSpec& norm, double a, double b,
                       int n_paths, const TransferOptions& opts, const RandomStream& stream, double confidence) {
  require_wiener_1d(model, "check_split");
  if (n_paths < 2) throw ConfigError("check_split: need at least two paths");
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("check_split: a and b must be positive");
  double p = 0.0;
  if (kind == SeriesKind::soft) {
    norm.validate();
    if (norm.kind != NormKind::lp) throw ConfigError("check_split: the soft split needs an L^p norm");
    p = norm.p;
  }
  const GaussianModel m = model.with_horizon(a + b);
  const std::vector<Path> paths = sample(m, stream, n_paths);
  SplitCheck out;
  const auto n = static_cast<std::size_t>(n_paths);
  out.whole.resize(n);
  out.first.resize(n);
  out.second.resize(n);
  out.tolerance.resize(n);
  const double sign = kind == SeriesKind::hard ? -1.0 : 1.0;
  parallel_for(n, [&](std::size_t i) {
    const Path& w = paths[i];
    const Eigen::Index k = grid_index(w, a);
    const Path head = Path::on_grid(w.values.topRows(k + 1), w.dt);
    const TransferResult rw = path_functional(kind, w, p, opts);
    const TransferResult r1 = path_functional(kind, head, p, opts);
    const TransferResult r2 = path_functional(kind, flow_shift(w, a), p, opts);
    out.whole[i] = sign * rw.log_value;
    out.first[i] = sign * r1.log_value;
    out.second[i] = sign * r2.log_value;
    out.tolerance[i] = confidence * (rw.error + r1.error + r2.error) + 1e-9 * (1.0 + std::abs(out.whole[i]));
  });
  std::vector<double> gap(n);
  for (std::size_t i = 0; i < n; ++i) {
    gap[i] = out.whole[i] - out.first[i] - out.second[i];
    const double excess = kind == SeriesKind::hard ? -gap[i] : gap[i];
    if (excess > out.tolerance[i]) ++out.n_violations;
  }
  out.mean_gap = mean(gap);
  out.gap_stderr = standard_error(gap);
  const bool hard = kind == SeriesKind::hard;
  out.report = {hard ? "Lambda superadditive" : "Lambda_a subadditive", hard ? "superadditivity" : "subadditivity", {}};
  const double whole = mean(out.whole), parts = mean(out.first) + mean(out.second);
  if (hard)
    out.report.add("mean", a + b, parts, whole, confidence * out.gap_stderr);
  else
    out.report.add("mean", a + b, whole, parts, confidence * out.gap_stderr);
  out.report.add("per-path-violations", a + b, out.n_violations, 0.0, 0.0);
  return out;
}

double dirichlet_eigenvalue(int d) {
  constexpr double j01 = 2.404825557695772768621631879;
  switch (d) {
    case 1:
      return std::numbers::pi * std::numbers::pi / 8.0;
    case 2:
      return j01 * j01 / 2.0;
    case 3:
      return std::numbers::pi * std::numbers::pi / 2.0;
    default:
      throw ConfigError("dirichlet_eigenvalue: only d = 1, 2, 3 are supported");
  }
}

EquidistributionResult equidistribution_check(double eps, long n_steps, int n_paths, const TransferOptions& opts,
                                              const RandomStream& stream) {
  if (!(eps > 0.0)) throw DomainError("equidistribution_check: eps must be positive");
  if (n_steps < 2 || n_paths < 2) throw ConfigError("equidistribution_check: need two or more steps and paths");
  const auto n = static_cast<int>(n_steps);
  const GaussianModel unit = GaussianModel::wiener(n);
  const GaussianModel stretched = GaussianModel::wiener(n, 1.0 / (eps * eps));
  const std::vector<Path> pt = sample(unit, stream.child(0), n_paths);
  const std::vector<Path> pb = sample(stretched, stream.child(1), n_paths);
  EquidistributionResult out;
  out.eps = eps;
  out.tilde.resize(pt.size());
  out.bar.resize(pb.size());
  parallel_for(pt.size(), [&](std::size_t i) {
    out.tilde[i] = -tube_log_prob_sup(pt[i].values.col(0), pt[i].dt, eps, opts).log_value;
    out.bar[i] = -tube_log_prob_sup(pb[i].values.col(0), pb[i].dt, 1.0, opts).log_value;
  });
  out.ks = ks_two_sample(out.tilde, out.bar);
  return out;
}

ConstantEstimate estimate_constant(const GaussianModel& model, const NormSpec& norm, ConstantMode mode,
                                   const ConstantParams& params, const RandomStream& stream) {
  norm.validate();
  const double gamma = small_ball_rate(norm);
  if (!std::isfinite(gamma)) throw ConfigError("estimate_constant: the norm has no finite small-ball rate");
  if (params.gamma != 0.0 && std::abs(params.gamma - gamma) > 1e-9 * gamma)
    throw ConfigError("estimate_constant: gamma does not match the norm");
  ConstantEstimate out;
  out.mode = mode;
  out.gamma = gamma;
  std::ostringstream diag;
  if (mode == ConstantMode::eps_fit) {
    out.eps_grid = params.eps_grid.empty() ? auto_eps_grid(model, norm) : params.eps_grid;
    for (std::size_t i = 1; i < out.eps_grid.size(); ++i)
      if (!(out.eps_grid[i] < out.eps_grid[i - 1])) throw ConfigError("estimate_constant: eps grid must be decreasing");
    if (out.eps_grid.size() < 2) throw ConfigError("estimate_constant: eps_fit needs two or more eps values");
    GaugeOptions go;
    go.bootstrap = 10;
    go.seed = stream.seed();
    const GaugeCurve g =
        gauge_stats(sample_rsbf(model, norm, out.eps_grid, params.n_centers, params.estimator, stream), go);
    const auto m = static_cast<Eigen::Index>(g.eps_grid.size());
    Eigen::VectorXd x(m), y(m), wt(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      x[i] = std::pow(g.eps_grid[k], -gamma);
      y[i] = g.mean[k];
      wt[i] = 1.0 / std::max(1e-300, g.mean_stderr[k] * g.mean_stderr[k]);
      out.scaled.push_back(std::pow(g.eps_grid[k], gamma) * g.mean[k]);
    }
    const LinearFit fit = linear_fit(x, y, wt);
    out.value = fit.slope;
    out.stderr_value = fit.slope_stderr;
    out.eps_grid = g.eps_grid;
    diag << "intercept " << fit.intercept << ", residual " << fit.residual_rms;
  } else {
    if (norm.kind == NormKind::sup) {
      out.series = lambda_hard(model, params.series, stream);
    } else if (norm.kind == NormKind::lp) {
      out.series = lambda_soft(model, norm, params.series, stream);
    } else {
      throw ConfigError("estimate_constant: the subadditive mode supports sup and L^p norms");
    }
    out.value = out.series.constant;
    out.stderr_value = out.series.constant_stderr;
    diag << "ratio at a = " << out.series.a_grid.back() << ": " << out.series.ratio_last;
    if (out.series.partial) diag << ", partial series";
  }
  out.diagnostics = diag.str();
  return out;
}

}  // namespace smallball
