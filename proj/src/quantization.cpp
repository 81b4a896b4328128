#include "smallball/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smallball/errors.hpp"
#include "smallball/parallel.hpp"

namespace smallball {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool whole_path(const NormSpec& norm, const Codebook& book) {
  if (!book.timed) return true;
  const double horizon = book.dt * static_cast<double>(book.nodes - 1);
  return norm.a == 0.0 && (!std::isfinite(norm.b) || std::abs(norm.b - horizon) <= 1e-12 * horizon);
}

std::string hypothesis_note(bool ok) {
  return ok ? std::string{} : std::string("hypothesis not satisfied; comparison informational only");
}

}  // namespace

long codebook_size(double r) {
  if (!std::isfinite(r)) throw ConfigError("codebook rate must be finite");
  const double n = std::floor(std::exp(r) * (1.0 + 1e-12));
  if (n < 1.0) throw ConfigError("codebook rate gives an empty codebook");
  if (n > 9.0e15) throw ConfigError("codebook rate too large");
  return static_cast<long>(n);
}

Path Codebook::entry(long i) const {
  if (i < 0 || i >= n) throw RangeError("codebook index out of range");
  Eigen::MatrixXd v = Eigen::Map<const Eigen::MatrixXd>(entries.col(i).data(), nodes, dim);
  return timed ? Path::on_grid(std::move(v), dt) : Path::coordinates(v.col(0));
}

Codebook build_codebook(const GaussianModel& model, double r, const RandomStream& stream, double memory_budget_bytes) {
  Codebook book = build_codebook_n(model, codebook_size(r), stream, memory_budget_bytes);
  book.r = r;
  return book;
}

Codebook build_codebook_n(const GaussianModel& model, long n, const RandomStream& stream, double memory_budget_bytes) {
  if (n < 1) throw ConfigError("codebook needs at least one entry");
  const Eigen::Index stride = model.n_nodes() * model.dim();
  if (static_cast<double>(n) * static_cast<double>(stride) * sizeof(double) > memory_budget_bytes)
    throw ConfigError("codebook of " + std::to_string(n) + " entries exceeds the memory budget");
  Codebook book;
  book.n = n;
  book.r = std::log(static_cast<double>(n));
  book.seed = stream.seed();
  book.stream = stream.stream_index();
  book.nodes = model.n_nodes();
  book.dim = model.dim();
  book.dt = model.is_path_model() ? model.dt() : 1.0;
  book.timed = model.is_path_model();
  book.entries.resize(stride, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    RandomStream s = stream.child(i);
    sample_into(model, s, book.entries.col(static_cast<Eigen::Index>(i)).data());
  });
  return book;
}

Nearest nearest_codeword(const Codebook& book, const NormSpec& norm, const Path& x) {
  if (x.values.rows() != book.nodes || x.dim() != book.dim || x.timed != book.timed)
    throw ShapeError("nearest_codeword: source does not match the codebook grid");
  Nearest best{-1, kInf};
  const double* xv = x.values.data();
  const Eigen::Index m = book.nodes;
  const bool fast = book.dim == 1 && whole_path(norm, book) && norm.kind != NormKind::hoelder;

  if (fast && norm.kind == NormKind::sup) {
    for (long i = 0; i < book.n; ++i) {
      const double* y = book.entries.col(i).data();
      double d = 0.0;
      // Late nodes of Brownian paths differ most: scan backwards for earlier exits.
      for (Eigen::Index k = m - 1; k >= 0 && d < best.distance; --k) d = std::max(d, std::abs(xv[k] - y[k]));
      if (d < best.distance) best = {i, d};
    }
    return best;
  }
  if (fast && norm.kind == NormKind::lp) {
    const double p = norm.p;
    std::vector<double> w(static_cast<std::size_t>(m), book.timed ? book.dt : 1.0);
    if (book.timed) {
      w.front() *= 0.5;
      w.back() *= 0.5;
    }
    double best_pow = kInf;
    for (long i = 0; i < book.n; ++i) {
      const double* y = book.entries.col(i).data();
      double acc = 0.0;
      for (Eigen::Index k = m - 1; k >= 0 && acc < best_pow; --k)
        acc += w[static_cast<std::size_t>(k)] * std::pow(std::abs(xv[k] - y[k]), p);
      if (acc < best_pow) {
        best_pow = acc;
        best.index = i;
      }
    }
    best.distance = std::pow(best_pow, 1.0 / p);
    return best;
  }
  for (long i = 0; i < book.n; ++i) {
    const double d = distance(x, book.entry(i), norm);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

QuantizationResult summarize_distortion(double r, long n, double s, std::vector<double> z, long batch_size) {
  if (!(s > 0.0)) throw DomainError("distortion: s must be positive");
  if (z.empty()) throw DataError("distortion: no test sources");
  QuantizationResult res;
  res.r = r;
  res.s = s;
  res.n = n;
  res.n_test = static_cast<long>(z.size());
  std::vector<double> powered(z.size());
  std::transform(z.begin(), z.end(), powered.begin(), [&](double v) { return std::pow(v, s); });
  const double m = mean(powered);
  std::vector<double> batch_means;
  for (std::size_t b = 0; b < powered.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(powered.size(), b + static_cast<std::size_t>(batch_size));
    batch_means.push_back(std::accumulate(powered.begin() + b, powered.begin() + e, 0.0) / static_cast<double>(e - b));
  }
  const double se_m = batch_means.size() >= 2 ? standard_error(batch_means) : standard_error(powered);
  res.D_hat = std::pow(m, 1.0 / s);
  res.stderr_D = m > 0.0 ? res.D_hat * se_m / (s * m) : 0.0;
  for (double q : res.z_levels) res.z_quantiles.push_back(quantile(z, q));
  res.z = std::move(z);
  return res;
}

QuantizationResult distortion(const GaussianModel& model, const NormSpec& norm, double r, double s, long n_test,
                              const RandomStream& stream, long batch_size) {
  if (!(s > 0.0)) throw DomainError("distortion: s must be positive");
  if (n_test < 1 || batch_size < 1) throw ConfigError("distortion: n_test and batch size must be positive");
  norm.validate();
  const long n = codebook_size(r);
  std::vector<double> z(static_cast<std::size_t>(n_test));
  for (long b = 0; b * batch_size < n_test; ++b) {
    const RandomStream bs = stream.child(static_cast<std::uint64_t>(b));
    const Codebook book = build_codebook_n(model, n, bs.child(0));
    const long begin = b * batch_size;
    const long count = std::min(batch_size, n_test - begin);
    const RandomStream sources = bs.child(1);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
      RandomStream si = sources.child(i);
      z[static_cast<std::size_t>(begin) + i] = nearest_codeword(book, norm, sample_path(model, si)).distance;
    });
  }
  return summarize_distortion(r, n, s, std::move(z), batch_size);
}

QuantizationResult distortion_fixed(const GaussianModel& model, const NormSpec& norm, const Codebook& book, double s,
                                    long n_test, const RandomStream& stream) {
  if (!(s > 0.0)) throw DomainError("distortion: s must be positive");
  if (n_test < 1) throw ConfigError("distortion: n_test must be positive");
  std::vector<double> z(static_cast<std::size_t>(n_test));
  parallel_for(z.size(), [&](std::size_t i) {
    RandomStream si = stream.child(i);
    z[i] = nearest_codeword(book, norm, sample_path(model, si)).distance;
  });
  return summarize_distortion(book.r, book.n, s, std::move(z), n_test);
}

LogLogInterpolant invert_curve(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size() || eps.size() < 2) throw ShapeError("invert_curve: need two or more matching points");
  std::vector<std::size_t> order(eps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return eps[i] < eps[j]; });
  Eigen::VectorXd x(static_cast<Eigen::Index>(eps.size())), y(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    x[k] = eps[order[static_cast<std::size_t>(k)]];
    y[k] = values[order[static_cast<std::size_t>(k)]];
  }
  const Eigen::VectorXd fitted = isotonic_regression(y, false);
  return LogLogInterpolant(fitted, x);
}

LogLogInterpolant invert_gauge(const GaugeCurve& gauge) { return invert_curve(gauge.eps_grid, gauge.mean); }

LogLogInterpolant invert_gauge(const SBFCurve& sbf) {
  std::vector<double> phi;
  for (const auto& e : sbf.phi) phi.push_back(e.phi());
  return invert_curve(sbf.eps_grid, phi);
}

CoverageResult coverage_from_z(const std::vector<double>& z, double r, double g, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("coverage: kappa must lie in (0, 1)");
  if (z.empty()) throw DataError("coverage: no samples");
  CoverageResult c;
  c.r = r;
  c.kappa = kappa;
  c.center = g;
  c.n_test = static_cast<long>(z.size());
  for (double v : z) c.hits += (v >= (1.0 - kappa) * g && v <= (1.0 + kappa) * g) ? 1 : 0;
  c.rate = static_cast<double>(c.hits) / static_cast<double>(c.n_test);
  c.ci = wilson_interval(c.hits, c.n_test);
  return c;
}

VerifierReport check_coverage_trend(std::vector<CoverageResult> rates) {
  VerifierReport rep{"coverage rate along r", "coverage-trend", {}};
  std::sort(rates.begin(), rates.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
  for (std::size_t k = 1; k < rates.size(); ++k) {
    const auto& lo = rates[k - 1];
    const auto& hi = rates[k];
    rep.add("rate-step", hi.r, lo.rate, hi.rate, (lo.ci.hi - lo.rate) + (hi.rate - hi.ci.lo));
  }
  return rep;
}

CoverageResult coverage_event_rate(const GaussianModel& model, const NormSpec& norm,
                                   const std::function<double(double)>& gauge_inverse, double r, double kappa,
                                   long n_test, const RandomStream& stream) {
  const double g = gauge_inverse(r);
  const QuantizationResult q = distortion(model, norm, r, 1.0, n_test, stream);
  return coverage_from_z(q.z, r, g, kappa);
}

VerifierReport verify_distortion_asymptotics(const std::vector<QuantizationResult>& results,
                                             const std::function<double(double)>& gauge_inverse,
                                             bool growth_hypothesis, const VerifierConfig& cfg, double band) {
  cfg.validate();
  VerifierReport rep{"distortion vs gauge inverse", "distortion-asymptotics", {}};
  std::vector<QuantizationResult> sorted = results;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
  std::vector<double> ratio, se;
  for (const auto& q : sorted) {
    const double g = gauge_inverse(q.r);
    ratio.push_back(q.D_hat / g);
    se.push_back(q.stderr_D / g);
    rep.add_informational("ratio", q.r, ratio.back(), 1.0, "stderr " + std::to_string(se.back()));
  }
  const std::string note = hypothesis_note(growth_hypothesis);
  for (std::size_t k = 1; k < ratio.size(); ++k) {
    const double lhs = std::abs(ratio[k] - 1.0), rhs = std::abs(ratio[k - 1] - 1.0);
    if (growth_hypothesis)
      rep.add("approach", sorted[k].r, lhs, rhs, cfg.confidence * std::hypot(se[k], se[k - 1]));
    else
      rep.add_informational("approach", sorted[k].r, lhs, rhs, note);
  }
  if (!ratio.empty()) {
    const double lhs = std::abs(ratio.back() - 1.0);
    if (growth_hypothesis)
      rep.add("final-band", sorted.back().r, lhs, band, 0.0);
    else
      rep.add_informational("final-band", sorted.back().r, lhs, band, note);
  }
  return rep;
}

VerifierReport verify_distortion_upper_bound(const std::vector<QuantizationResult>& results,
                                             const std::function<double(double)>& sbf_inverse, bool growth_hypothesis,
                                             const VerifierConfig& cfg) {
  cfg.validate();
  VerifierReport rep{"distortion upper bound", "distortion-upper-bound", {}};
  for (const auto& q : results) {
    const double rhs = (1.0 + cfg.delta) * 2.0 * sbf_inverse(0.5 * q.r);
    if (growth_hypothesis)
      rep.add("bound", q.r, q.D_hat, rhs, cfg.confidence * q.stderr_D);
    else
      rep.add_informational("bound", q.r, q.D_hat, rhs, hypothesis_note(false));
  }
  return rep;
}

}  // namespace smallball
