#include "smallball/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "smallball/errors.hpp"
#include "smallball/parallel.hpp"
#include "smallball/special_functions.hpp"

namespace smallball {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

double se_or_zero(const ProbEstimate& e) { return std::isfinite(e.stderr_log) ? e.stderr_log : 0.0; }

ProbEstimate centered_phi(const GaussianModel& model, const NormSpec& norm, double eps, const EstimatorOptions& opts,
                          const RandomStream& stream) {
  if (auto a = sbf_analytic(model, norm, eps)) return *a;
  return ball_prob(model, norm, model.zero_path(), eps, opts, stream);
}

}  // namespace

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::informational: return "informational";
  }
  return "unknown";
}

Verdict VerifierReport::verdict() const {
  bool any_checked = false;
  for (const auto& r : rows) {
    if (r.verdict == Verdict::fail) return Verdict::fail;
    if (r.verdict == Verdict::pass) any_checked = true;
  }
  return any_checked ? Verdict::pass : Verdict::informational;
}

void VerifierReport::add(std::string check, double x, double lhs, double rhs, double tolerance, std::string note) {
  const Verdict v = lhs <= rhs + tolerance ? Verdict::pass : Verdict::fail;
  rows.push_back({std::move(check), x, lhs, rhs, tolerance, v, std::move(note)});
}

void VerifierReport::add_informational(std::string check, double x, double lhs, double rhs, std::string note) {
  rows.push_back({std::move(check), x, lhs, rhs, 0.0, Verdict::informational, std::move(note)});
}

VerifierReport verify_enclosure(const SBFCurve& sbf, const GaugeCurve& gauge, const VerifierConfig& cfg) {
  cfg.validate();
  VerifierReport rep{"enclosure", "enclosure", {}};
  std::vector<double> fractions;
  std::vector<Interval> cis;
  for (std::size_t j = 0; j < gauge.eps_grid.size(); ++j) {
    const double eps = gauge.eps_grid[j];
    const ProbEstimate& phi = sbf.at(eps);
    const ProbEstimate& phi_half = sbf.at(0.5 * eps);
    const auto& v = gauge.values[j];
    const auto& se = gauge.stderrs[j];

    int violations = 0;
    long covered = 0;
    const double upper = (1.0 + cfg.delta) * 2.0 * phi_half.phi();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (phi.phi() - v[i] > cfg.confidence * std::hypot(se[i], se_or_zero(phi))) ++violations;
      if (v[i] <= upper) ++covered;
    }
    rep.add("lower-bound-violations", eps, violations, 0.0, 0.0, "centers with ell below phi beyond the confidence band");
    const auto n = static_cast<long>(v.size());
    fractions.push_back(static_cast<double>(covered) / static_cast<double>(n));
    cis.push_back(wilson_interval(covered, n));
    rep.add_informational("upper-bound-fraction", eps, fractions.back(), 1.0,
                          "wilson [" + fmt(cis.back().lo) + ", " + fmt(cis.back().hi) + "]");
  }
  for (std::size_t j = 1; j < fractions.size(); ++j) {
    // Grid is decreasing in eps: the fraction must not drop significantly.
    const double tol = 0.5 * (cis[j - 1].hi - cis[j - 1].lo) + 0.5 * (cis[j].hi - cis[j].lo);
    rep.add("upper-bound-trend", gauge.eps_grid[j], fractions[j - 1] - fractions[j], 0.0, tol,
            "drop of the covered fraction from the previous eps");
  }
  return rep;
}

VerifierReport verify_gauge_sandwich(const SBFCurve& sbf, const GaugeCurve& gauge, const VerifierConfig& cfg) {
  cfg.validate();
  VerifierReport rep{"gauge sandwich", "gauge-sandwich", {}};
  const double k = cfg.confidence;
  for (std::size_t j = 0; j < gauge.eps_grid.size(); ++j) {
    const double eps = gauge.eps_grid[j];
    const ProbEstimate& lo = sbf.at(eps / std::numbers::sqrt2);
    const ProbEstimate& hi = sbf.at(0.5 * eps);
    const ProbEstimate& at = sbf.at(eps);
    const double m = (1.0 + cfg.delta) * gauge.mean[j];
    const double m_se = (1.0 + cfg.delta) * gauge.mean_stderr[j];
    const double right = (1.0 + cfg.delta) * (1.0 + cfg.delta) * 2.0 * hi.phi();
    const double right_se = (1.0 + cfg.delta) * (1.0 + cfg.delta) * 2.0 * se_or_zero(hi);
    rep.add("lower", eps, lo.phi(), m, k * std::hypot(se_or_zero(lo), m_se), "phi(eps/sqrt2) <= (1+delta) mean");
    rep.add("upper", eps, m, right, k * std::hypot(m_se, right_se), "(1+delta) mean <= (1+delta)^2 2 phi(eps/2)");
    rep.add("centered-below-mean", eps, at.phi(), gauge.mean[j], k * std::hypot(se_or_zero(at), gauge.mean_stderr[j]));
    rep.add("centered-below-median", eps, at.phi(), gauge.median[j],
            k * se_or_zero(at) + (gauge.median_ci[j].hi - gauge.median[j]));
  }
  return rep;
}

DoublingReport check_doubling(const SBFCurve& sbf, DoublingKind which, const VerifierConfig& cfg) {
  cfg.validate();
  DoublingReport out;
  out.report.name = which == DoublingKind::regularity ? "doubling regularity" : "doubling growth";
  out.report.tag = which == DoublingKind::regularity ? "doubling-regularity" : "doubling-growth";
  for (std::size_t i = 0; i < sbf.eps_grid.size(); ++i) {
    const double eps = sbf.eps_grid[i];
    if (!sbf.contains(2.0 * eps)) continue;
    const ProbEstimate& small = sbf.phi[i];
    const ProbEstimate& big = sbf.at(2.0 * eps);
    if (!(big.phi() > 0.0)) continue;
    const double r = small.phi() / big.phi();
    const double rel = std::hypot(se_or_zero(small) / small.phi(), se_or_zero(big) / big.phi());
    const double tol = cfg.confidence * r * rel;
    out.eps.push_back(eps);
    out.ratio.push_back(r);
    if (which == DoublingKind::regularity)
      out.report.add("ratio", eps, r, cfg.nu, tol, "phi(eps) / phi(2 eps) <= nu");
    else
      out.report.add("ratio", eps, cfg.nu_tilde, r, tol, "phi(eps) / phi(2 eps) >= nu_tilde");
  }
  if (out.ratio.empty()) {
    out.report.add_informational("ratio", 0.0, 0.0, 0.0, "no eps with 2 eps on the grid");
    return out;
  }
  out.fitted = which == DoublingKind::regularity ? *std::max_element(out.ratio.begin(), out.ratio.end())
                                                 : *std::min_element(out.ratio.begin(), out.ratio.end());
  out.holds = out.report.verdict() == Verdict::pass;
  return out;
}

VerifierReport check_concentration_trend(const GaugeCurve& gauge) {
  VerifierReport rep{"concentration trend", "concentration", {}};
  for (std::size_t j = 0; j < gauge.eps_grid.size(); ++j)
    rep.add_informational("relative-iqr", gauge.eps_grid[j], gauge.dispersion[j], 0.0,
                          "bootstrap [" + fmt(gauge.dispersion_ci[j].lo) + ", " + fmt(gauge.dispersion_ci[j].hi) + "]");
  for (std::size_t j = 1; j < gauge.eps_grid.size(); ++j)
    rep.add("relative-iqr-trend", gauge.eps_grid[j], gauge.dispersion_ci[j].lo, gauge.dispersion_ci[j - 1].hi, 0.0,
            "lower bootstrap end at eps vs upper end at the previous eps");
  return rep;
}

VerifierReport check_mean_median_trend(const GaugeCurve& gauge, std::uint64_t seed) {
  VerifierReport rep{"mean-median agreement trend", "mean-median", {}};
  const RandomStream boot(seed, 0xbb67ae85ULL);
  auto stat = [](const std::vector<double>& x) {
    const double med = lower_median(x);
    return med > 0.0 ? std::abs(mean(x) / med - 1.0) : 0.0;
  };
  std::vector<Interval> cis;
  for (std::size_t j = 0; j < gauge.eps_grid.size(); ++j) {
    cis.push_back(bootstrap_interval(gauge.values[j], stat, 400, boot.child(j)));
    rep.add_informational("mean-over-median", gauge.eps_grid[j], stat(gauge.values[j]), 0.0,
                          "bootstrap [" + fmt(cis.back().lo) + ", " + fmt(cis.back().hi) + "]");
  }
  for (std::size_t j = 1; j < cis.size(); ++j)
    rep.add("mean-over-median-trend", gauge.eps_grid[j], cis[j].lo, cis[j - 1].hi, 0.0);
  return rep;
}

bool certify_enlarged_ball(const GaussianModel& model, const NormSpec& norm, const Path& x, double eps, double radius) {
  model.check_shape(x);
  if (!model.is_path_model()) {
    Path h = x;
    if (norm.kind == NormKind::sup) {
      h.values = x.values.unaryExpr([&](double v) { return std::copysign(std::max(0.0, std::abs(v) - eps), v); });
    } else {
      const double nx = eval_norm(x, norm);
      const double t = nx > eps ? 1.0 - eps / nx : 0.0;
      h.values = t * x.values;
    }
    return rkhs_norm(model, h) <= radius && distance(x, h, norm) <= eps * (1.0 + 1e-12);
  }
  const auto n = static_cast<Eigen::Index>(model.grid_n());
  std::vector<Eigen::Index> knot_counts;
  for (Eigen::Index k = 8; k < n; k *= 2) knot_counts.push_back(k);
  knot_counts.push_back(n);
  Path h = x;
  for (Eigen::Index k : knot_counts) {
    // Piecewise-linear interpolant of x through k + 1 knots on the grid.
    Eigen::Index prev = 0;
    for (Eigen::Index j = 1; j <= k; ++j) {
      const Eigen::Index next = (j * n) / k;
      for (Eigen::Index t = prev; t <= next; ++t) {
        const double w = next == prev ? 0.0 : static_cast<double>(t - prev) / static_cast<double>(next - prev);
        h.values.row(t) = (1.0 - w) * x.values.row(prev) + w * x.values.row(next);
      }
      prev = next;
    }
    h.values.row(0).setZero();
    if (distance(x, h, norm) <= eps && rkhs_norm(model, h) <= radius) return true;
  }
  return false;
}

CmShift random_shift(const GaussianModel& model, double magnitude, RandomStream& stream) {
  if (!(magnitude >= 0.0)) throw DomainError("random_shift: magnitude must be nonnegative");
  Path h = model.zero_path();
  if (magnitude == 0.0) return {h, 0.0};
  switch (model.kind()) {
    case ModelKind::scalar:
      h.values(0, 0) = (stream.uniform() < 0.5 ? -1.0 : 1.0) * model.sigma();
      break;
    case ModelKind::finite_spectrum:
      h.values.col(0) = stream.normal_vector(model.n_nodes());
      break;
    case ModelKind::wiener:
    case ModelKind::brownian_bridge: {
      const bool bridge = model.kind() == ModelKind::brownian_bridge;
      for (int c = 0; c < model.dim(); ++c) {
        const Eigen::VectorXd a = stream.normal_vector(4);
        for (Eigen::Index k = 0; k < h.n_nodes(); ++k) {
          const double t = h.time(k) / model.horizon();
          double v = 0.0;
          for (int j = 0; j < 4; ++j) v += a[j] * std::sin((bridge ? j + 1.0 : j + 0.5) * std::numbers::pi * t);
          h.values(k, c) = v;
        }
      }
      if (bridge) h.values.row(h.n_nodes() - 1).setZero();
      h.values.row(0).setZero();
      break;
    }
  }
  const double norm = rkhs_norm(model, h);
  h.values *= magnitude / norm;
  return make_shift(model, h);
}

LipschitzReport lipschitz_probe(const GaussianModel& model, const NormSpec& norm, double eps, int n_pairs,
                                const std::vector<double>& shift_magnitudes, const EstimatorOptions& opts,
                                const RandomStream& stream) {
  if (!(eps > 0.0)) throw DomainError("lipschitz_probe: eps must be positive");
  if (n_pairs < 1 || shift_magnitudes.empty()) throw ConfigError("lipschitz_probe: need pairs and shift magnitudes");
  LipschitzReport out;
  out.report = {"lipschitz probe", "lipschitz", {}};
  const ProbEstimate phi = centered_phi(model, norm, eps, opts, stream.child(0));
  const ProbEstimate phi2 = centered_phi(model, norm, 2.0 * eps, opts, stream.child(1));
  out.phi_eps = phi.phi();
  out.phi_two_eps = phi2.phi();
  const double gate = -log_normal_cdf(-3.0);
  if (out.phi_two_eps < gate)
    throw GateError("lipschitz_probe: phi(2 eps) = " + fmt(out.phi_two_eps) + " is below the gate " + fmt(gate) +
                    "; use a smaller eps");
  const double radius = 3.0 * std::sqrt(out.phi_eps);
  const double slope = 8.0 * std::sqrt(out.phi_eps);

  struct PairResult {
    bool certified = false;
    double delta = 0.0, bound = 0.0, tol = 0.0, ratio = 0.0, magnitude = 0.0;
  };
  std::vector<PairResult> results(static_cast<std::size_t>(n_pairs));
  const RandomStream pairs = stream.child(2);
  parallel_for(results.size(), [&](std::size_t i) {
    RandomStream s = pairs.child(i);
    const Path x = sample_path(model, s);
    const double mag = shift_magnitudes[i % shift_magnitudes.size()];
    const CmShift h = random_shift(model, mag, s);
    const Path xh = x + h.h;
    PairResult& r = results[i];
    r.magnitude = h.rkhs_norm;
    r.certified = certify_enlarged_ball(model, norm, x, eps, radius) && certify_enlarged_ball(model, norm, xh, eps, radius);
    if (!r.certified) return;
    // Common random numbers for the two inner estimates.
    const RandomStream inner = s.child(7);
    const ProbEstimate a = ball_prob(model, norm, x, 2.0 * eps, opts, inner);
    const ProbEstimate b = ball_prob(model, norm, xh, 2.0 * eps, opts, inner);
    r.delta = std::abs(b.log_prob - a.log_prob);
    r.bound = slope * h.rkhs_norm;
    r.tol = 3.0 * combined_stderr(a, b);
    r.ratio = h.rkhs_norm > 0.0 ? r.delta / (std::sqrt(out.phi_eps) * h.rkhs_norm) : 0.0;
  });

  out.n_pairs = n_pairs;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const PairResult& r = results[i];
    if (!r.certified) {
      out.report.add_informational("pair", static_cast<double>(i), 0.0, 0.0, "not certified in the enlarged ball");
      continue;
    }
    ++out.n_certified;
    if (r.delta > r.bound + r.tol) ++out.n_violations;
    out.max_ratio = std::max(out.max_ratio, r.ratio);
    out.report.add("pair", static_cast<double>(i), r.delta, r.bound, r.tol, "|h|_mu = " + fmt(r.magnitude));
  }
  return out;
}

SetDescriptor SetDescriptor::ball(Path center, double eps, NormSpec norm) {
  if (!(eps > 0.0)) throw DomainError("ball set: eps must be positive");
  SetDescriptor s;
  s.kind = Kind::ball;
  s.center = std::move(center);
  s.eps = eps;
  s.norm = norm;
  return s;
}

SetDescriptor SetDescriptor::half_space(const GaussianModel& model, Path direction, double level) {
  const double n = rkhs_norm(model, direction);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("half-space direction must be a nonzero RKHS element");
  SetDescriptor s;
  s.kind = Kind::half_space;
  s.direction = (1.0 / n) * direction;
  s.level = level;
  return s;
}

ShiftReport shift_inequality_check(const GaussianModel& model, const SetDescriptor& set, const CmShift& shift,
                                   const EstimatorOptions& opts, const RandomStream& stream) {
  ShiftReport out;
  out.report = {"gaussian shift inequality", "shift-inequality", {}};
  const double hn = shift.rkhs_norm;
  if (set.kind == SetDescriptor::Kind::half_space) {
    const double inner = paley_wiener(model, set.direction, shift.h);
    out.mass = {log_normal_cdf(set.level), 0.0, 0, Method::analytic, false};
    out.shifted_mass = {log_normal_cdf(set.level + inner), 0.0, 0, Method::analytic, false};
  } else {
    out.mass = ball_prob(model, set.norm, set.center, set.eps, opts, stream.child(0));
    out.shifted_mass = ball_prob(model, set.norm, set.center + shift.h, set.eps, opts, stream.child(1));
    if (set.center.values.isZero(0.0) && hn > 0.0) {
      const ProbEstimate cm = ball_prob_cm(model, set.norm, shift, set.eps, std::max(opts.n_samples, 1000L), stream.child(2));
      out.report.add("cm-agreement", hn, std::abs(cm.log_prob - out.shifted_mass.log_prob), 0.0,
                     3.0 * combined_stderr(cm, out.shifted_mass), "reweighted vs direct shifted-ball estimate");
    }
  }

  const double k = 3.0;
  const double lp = out.mass.log_prob, se = se_or_zero(out.mass);
  const double lp2 = out.shifted_mass.log_prob, se2 = se_or_zero(out.shifted_mass);
  auto bound = [&](double log_p, double offset) {
    return log_normal_cdf(normal_quantile(std::min(1.0, std::exp(log_p))) + offset);
  };
  out.lower = std::exp(bound(lp, -hn));
  out.upper = std::exp(bound(lp, hn));
  // Bounds are monotone in mu(A): widen them by the error band of mu(A).
  // Bounds are attained by half-spaces, so the quantile round trip needs a roundoff allowance.
  const double roundoff = 1e-10 * (1.0 + std::abs(lp2));
  const double lower_tol = bound(lp, -hn) - bound(lp - k * se, -hn) + k * se2 + roundoff;
  const double upper_tol = bound(lp + k * se, hn) - bound(lp, hn) + k * se2 + roundoff;
  out.report.add("lower", hn, bound(lp, -hn), lp2, lower_tol, "log Phi(Phi^-1(mu(A)) - |h|) <= log mu(A+h)");
  out.report.add("upper", hn, lp2, bound(lp, hn), upper_tol, "log mu(A+h) <= log Phi(Phi^-1(mu(A)) + |h|)");
  return out;
}

EnlargedBallReport verify_enlarged_ball(const GaussianModel& model, const NormSpec& norm, double eps, long n_samples,
                                        const EstimatorOptions& opts, const RandomStream& stream) {
  if (!(eps > 0.0)) throw DomainError("verify_enlarged_ball: eps must be positive");
  if (n_samples < 1) throw ConfigError("verify_enlarged_ball: n_samples must be >= 1");
  EnlargedBallReport out;
  out.report = {"enlarged ball mass", "enlarged-ball", {}};
  const ProbEstimate phi = centered_phi(model, norm, eps, opts, stream.child(0));
  out.phi = phi.phi();
  out.radius = 3.0 * std::sqrt(out.phi);
  out.n_samples = n_samples;
  const double target = std::exp(-out.phi);

  if (model.kind() == ModelKind::scalar && norm.kind != NormKind::hoelder) {
    const double closed = 2.0 * normal_tail(eps / model.sigma() + out.radius);
    out.report.add("closed-form", eps, closed, target, 0.0, "2 Upsilon(eps + M) <= exp(-phi)");
  }

  constexpr long kBlock = 256;
  const long blocks = (n_samples + kBlock - 1) / kBlock;
  std::vector<long> misses(static_cast<std::size_t>(blocks), 0);
  const RandomStream draws = stream.child(1);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    RandomStream s = draws.child(b);
    const long count = std::min(kBlock, n_samples - static_cast<long>(b) * kBlock);
    for (long i = 0; i < count; ++i)
      if (!certify_enlarged_ball(model, norm, sample_path(model, s), eps, out.radius)) ++misses[b];
  });
  for (long m : misses) out.n_uncertified += m;
  out.uncertified_ci = wilson_interval(out.n_uncertified, n_samples);
  out.report.add("uncertified-fraction", eps, out.uncertified_ci.lo, target, 0.0,
                 "fraction " + fmt(static_cast<double>(out.n_uncertified) / static_cast<double>(n_samples)) +
                     ", wilson upper " + fmt(out.uncertified_ci.hi));
  return out;
}

}  // namespace smallball
