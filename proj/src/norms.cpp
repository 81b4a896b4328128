#include "smallball/norms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smallball/errors.hpp"

namespace smallball {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Eigen::Index kHoelderAllPairsLimit = 2049;

using ConstMatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

// Sampled restriction of a path to an interval: point times and values, endpoints
// interpolated linearly.
struct Restriction {
  Eigen::VectorXd t;
  Eigen::MatrixXd v;
};

double point_magnitude(const ConstMatrixRef& v, Eigen::Index i) {
  return v.cols() == 1 ? std::abs(v(i, 0)) : v.row(i).norm();
}

double sup_of(const ConstMatrixRef& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.rows(); ++i) m = std::max(m, point_magnitude(v, i));
  return m;
}

double lp_integral(const ConstMatrixRef& v, const Eigen::VectorXd& t, double p) {
  double sum = 0.0;
  double prev = std::pow(point_magnitude(v, 0), p);
  for (Eigen::Index i = 1; i < v.rows(); ++i) {
    const double cur = std::pow(point_magnitude(v, i), p);
    sum += 0.5 * (t[i] - t[i - 1]) * (prev + cur);
    prev = cur;
  }
  return sum;
}

double hoelder_of(const ConstMatrixRef& v, const Eigen::VectorXd& t, double beta) {
  const Eigen::Index m = v.rows();
  double best = 0.0;
  auto ratio = [&](Eigen::Index i, Eigen::Index j) {
    const double gap = t[j] - t[i];
    if (gap <= 0.0) return 0.0;
    const double diff = v.cols() == 1 ? std::abs(v(j, 0) - v(i, 0)) : (v.row(j) - v.row(i)).norm();
    return beta == 0.0 ? diff : diff / std::pow(gap, beta);
  };
  if (m <= kHoelderAllPairsLimit) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) best = std::max(best, ratio(i, j));
    return best;
  }
  // Dyadic lags only: a lower bound of the all-pairs value.
  for (Eigen::Index lag = 1; lag < m; lag *= 2)
    for (Eigen::Index i = 0; i + lag < m; ++i) best = std::max(best, ratio(i, i + lag));
  return best;
}

double evaluate_points(const ConstMatrixRef& v, const Eigen::VectorXd& t, const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::sup: return sup_of(v);
    case NormKind::lp: return std::pow(lp_integral(v, t, spec.p), 1.0 / spec.p);
    case NormKind::hoelder: return hoelder_of(v, t, spec.beta);
  }
  return kInf;
}

double evaluate_coordinates(const ConstMatrixRef& v, const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::sup: return v.cwiseAbs().maxCoeff();
    case NormKind::lp: return std::pow(v.array().abs().pow(spec.p).sum(), 1.0 / spec.p);
    case NormKind::hoelder: throw ConfigError("Hoelder seminorm needs a timed path");
  }
  return kInf;
}

Restriction restrict_to(const Path& path, const IntervalView& iv) {
  const Eigen::Index lo = iv.first;
  const Eigen::Index hi = iv.last;
  const bool head = path.time(lo) > iv.a;
  const bool tail = path.time(hi) < iv.b;
  const Eigen::Index inner = hi >= lo ? hi - lo + 1 : 0;
  const Eigen::Index m = inner + (head ? 1 : 0) + (tail ? 1 : 0);
  Restriction r{Eigen::VectorXd(m), Eigen::MatrixXd(m, path.dim())};

  auto interpolate = [&](double s) -> Eigen::RowVectorXd {
    const double x = s / path.dt;
    const Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), path.n_nodes() - 2);
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * path.values.row(k) + w * path.values.row(k + 1);
  };

  Eigen::Index row = 0;
  if (head) {
    r.t[row] = iv.a;
    r.v.row(row++) = interpolate(iv.a);
  }
  for (Eigen::Index k = lo; k <= hi; ++k) {
    r.t[row] = path.time(k);
    r.v.row(row++) = path.values.row(k);
  }
  if (tail) {
    r.t[row] = iv.b;
    r.v.row(row++) = interpolate(iv.b);
  }
  return r;
}

double eval_timed(const Path& path, const NormSpec& spec) {
  const IntervalView iv = resolve_interval(path, spec);
  const bool whole = iv.first == 0 && iv.last == path.n_nodes() - 1 && path.time(0) == iv.a &&
                     path.time(iv.last) == iv.b;
  if (whole && spec.kind == NormKind::sup) return sup_of(path.values);
  const Restriction r = restrict_to(path, iv);
  return evaluate_points(r.v, r.t, spec);
}

}  // namespace

NormSpec NormSpec::sup_norm() { return NormSpec{}; }

NormSpec NormSpec::lp_norm(double p) {
  NormSpec s;
  s.kind = NormKind::lp;
  s.p = p;
  s.validate();
  return s;
}

NormSpec NormSpec::hoelder(double beta) {
  NormSpec s;
  s.kind = NormKind::hoelder;
  s.beta = beta;
  s.validate();
  return s;
}

NormSpec NormSpec::on(double a_, double b_) const {
  NormSpec s = *this;
  s.a = a_;
  s.b = b_;
  s.validate();
  return s;
}

void NormSpec::validate() const {
  if (kind == NormKind::lp && !(p >= 1.0 && std::isfinite(p))) throw ConfigError("L^p norm needs finite p >= 1");
  if (kind == NormKind::hoelder && !(beta >= 0.0 && beta < 0.5)) throw ConfigError("Hoelder exponent must lie in [0, 1/2)");
  if (!(a >= 0.0) || !(b > a)) throw ConfigError("norm interval needs 0 <= a < b");
}

std::string NormSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case NormKind::sup: out << "sup"; break;
    case NormKind::lp: out << "L" << p; break;
    case NormKind::hoelder: out << "hoelder(" << beta << ")"; break;
  }
  if (a != 0.0 || std::isfinite(b)) out << "[" << a << "," << b << "]";
  return out.str();
}

double self_similarity_index(const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::sup: return 0.0;
    case NormKind::lp: return -1.0 / spec.p;
    case NormKind::hoelder: return spec.beta;
  }
  return 0.0;
}

double superadditivity_exponent(const NormSpec& spec) { return spec.kind == NormKind::lp ? spec.p : kInf; }

double small_ball_rate(const NormSpec& spec) {
  const double inv_p = spec.kind == NormKind::lp ? 1.0 / spec.p : 0.0;
  const double denom = 0.5 - self_similarity_index(spec) - inv_p;
  return denom > 0.0 ? 1.0 / denom : kInf;
}

double soft_exponent(const NormSpec& spec) {
  if (spec.kind != NormKind::lp) throw ConfigError("soft exponent needs an L^p norm");
  return spec.p * (0.5 - self_similarity_index(spec));
}

IntervalView resolve_interval(const Path& path, const NormSpec& spec) {
  if (!path.timed) throw ShapeError("interval restriction needs a timed path");
  const double horizon = path.horizon();
  const double tol = 1e-9 * path.dt;
  IntervalView iv;
  iv.a = spec.a;
  iv.b = std::isfinite(spec.b) ? spec.b : horizon;
  if (iv.a < -tol || iv.b > horizon + tol || !(iv.b > iv.a))
    throw ShapeError("norm interval lies outside the path domain");
  iv.b = std::min(iv.b, horizon);
  iv.first = static_cast<Eigen::Index>(std::ceil(iv.a / path.dt - 1e-9));
  iv.last = static_cast<Eigen::Index>(std::floor(iv.b / path.dt + 1e-9));
  iv.last = std::min(iv.last, path.n_nodes() - 1);
  // Snap endpoints that sit on a node.
  if (std::abs(path.time(iv.first) - iv.a) <= tol) iv.a = path.time(iv.first);
  if (std::abs(path.time(iv.last) - iv.b) <= tol) iv.b = path.time(iv.last);
  return iv;
}

double eval_norm(const Path& path, const NormSpec& spec) {
  spec.validate();
  if (!path.timed) return evaluate_coordinates(path.values, spec);
  return eval_timed(path, spec);
}

double distance(const Path& x, const Path& y, const NormSpec& spec) {
  if (x.values.rows() != y.values.rows() || x.values.cols() != y.values.cols() || x.timed != y.timed)
    throw ShapeError("distance: shape mismatch");
  if (spec.kind == NormKind::sup && x.dim() == 1 && spec.a == 0.0 && !std::isfinite(spec.b))
    return (x.values - y.values).cwiseAbs().maxCoeff();
  return eval_norm(x - y, spec);
}

double norm_of_raw(const double* values, Eigen::Index nodes, int dim, double dt, bool timed, const NormSpec& spec) {
  const Eigen::Map<const Eigen::MatrixXd> v(values, nodes, dim);
  if (!timed) return evaluate_coordinates(v, spec);
  if (spec.kind == NormKind::sup) return sup_of(v);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(nodes, 0.0, dt * static_cast<double>(nodes - 1));
  return evaluate_points(v, t, spec);
}

SelfSimilarityReport check_self_similarity(const NormSpec& spec, const Path& path, double c) {
  if (!(c > 0.0)) throw ConfigError("self-similarity factor must be positive");
  if (!path.timed) throw ShapeError("self-similarity needs a timed path");
  const IntervalView iv = resolve_interval(path, spec);
  const Path scaled{path.values, path.dt / c, true};
  const NormSpec scaled_spec = spec.on(iv.a / c, iv.b / c);
  const double base = eval_norm(path, spec.on(iv.a, iv.b));
  const double image = eval_norm(scaled, scaled_spec);

  SelfSimilarityReport rep;
  rep.expected_exponent = self_similarity_index(spec);
  if (base == 0.0) {
    rep.residual = image == 0.0 ? 0.0 : kInf;
    rep.measured_exponent = rep.expected_exponent;
    return rep;
  }
  rep.residual = std::abs(image - std::pow(c, rep.expected_exponent) * base) / base;
  rep.measured_exponent = c == 1.0 ? rep.expected_exponent : std::log(image / base) / std::log(c);
  return rep;
}

SuperadditivityReport check_superadditivity(const NormSpec& spec, const Path& path, std::vector<double> breakpoints) {
  if (!path.timed) throw ShapeError("superadditivity needs a timed path");
  const IntervalView iv = resolve_interval(path, spec);
  if (breakpoints.empty() || breakpoints.front() > iv.a) breakpoints.insert(breakpoints.begin(), iv.a);
  if (breakpoints.back() < iv.b) breakpoints.push_back(iv.b);
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1])) throw ConfigError("partition must be strictly increasing");
  if (breakpoints.front() < iv.a || breakpoints.back() > iv.b) throw ConfigError("partition leaves the norm interval");

  const double whole = eval_norm(path, spec.on(iv.a, iv.b));
  const double p = superadditivity_exponent(spec);
  double combined = 0.0;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    const double part = eval_norm(path, spec.on(breakpoints[i - 1], breakpoints[i]));
    combined = std::isfinite(p) ? combined + std::pow(part, p) : std::max(combined, part);
  }
  if (std::isfinite(p)) combined = std::pow(combined, 1.0 / p);

  SuperadditivityReport rep;
  rep.slack = whole - combined;
  rep.holds = rep.slack >= -1e-12 * std::max(1.0, whole);
  return rep;
}

}  // namespace smallball
