#include "smallball/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smallball/errors.hpp"
#include "smallball/parallel.hpp"
#include "smallball/stats.hpp"

namespace smallball {

namespace {

constexpr int kMaxLevels = 400;
constexpr std::uint64_t kInitTag = 0;
constexpr std::uint64_t kResampleTag = 1;
constexpr std::uint64_t kMoveTag = 2;
constexpr std::uint64_t kLadderTag = 1ULL << 20;

struct ChainOutput {
  double log_prob = 0.0;
  double naive_var = 0.0;
  std::vector<SplittingLevel> levels;
};

// Particle population with per-particle distances to the center.
class Population {
 public:
  Population(const GaussianModel& model, const NormSpec& norm, const Path& center, int size)
      : model_(model), norm_(norm), center_(center), stride_(model.n_nodes() * model.dim()),
        lazy_(transfer_supported(model, norm)),
        data_(stride_, size), dist_(static_cast<std::size_t>(size)) {}

  int size() const { return static_cast<int>(data_.cols()); }
  const std::vector<double>& distances() const { return dist_; }

  void initialize(const RandomStream& stream) {
    parallel_for(static_cast<std::size_t>(size()), [&](std::size_t i) {
      RandomStream s = stream.child(i);
      sample_into(model_, s, data_.col(static_cast<Eigen::Index>(i)).data());
      dist_[i] = distance_of(data_.col(static_cast<Eigen::Index>(i)).data());
    });
  }

  double fraction_within(double level) const {
    long inside = 0;
    for (double d : dist_) inside += d <= level ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(dist_.size());
  }

  // Multinomial resampling of the particles inside level.
  void resample_within(double level, RandomStream stream) {
    std::vector<Eigen::Index> survivors;
    for (std::size_t i = 0; i < dist_.size(); ++i)
      if (dist_[i] <= level) survivors.push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd next(data_.rows(), data_.cols());
    std::vector<double> next_dist(dist_.size());
    for (Eigen::Index i = 0; i < data_.cols(); ++i) {
      const Eigen::Index src = survivors[stream.below(survivors.size())];
      next.col(i) = data_.col(src);
      next_dist[static_cast<std::size_t>(i)] = dist_[static_cast<std::size_t>(src)];
    }
    data_.swap(next);
    dist_.swap(next_dist);
  }

  // Runs `moves` autoregressive proposals per particle restricted to level; returns the
  // acceptance rate.
  double refresh(double level, double rho, int moves, const RandomStream& stream) {
    const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    std::vector<long> accepted(static_cast<std::size_t>(size()), 0);
    parallel_for(static_cast<std::size_t>(size()), [&](std::size_t i) {
      RandomStream rs = stream.child(i);
      double* x = data_.col(static_cast<Eigen::Index>(i)).data();
      std::vector<double> proposal(static_cast<std::size_t>(stride_));
      for (int m = 0; m < moves; ++m) {
        double d = 0.0;
        bool ok = lazy_ ? propose_lazy(x, proposal.data(), rho, s, level, rs, d)
                        : propose_full(x, proposal.data(), rho, s, level, rs, d);
        if (ok) {
          std::copy(proposal.begin(), proposal.end(), x);
          dist_[i] = d;
          ++accepted[i];
        }
      }
    });
    long total = 0;
    for (long a : accepted) total += a;
    return static_cast<double>(total) / (static_cast<double>(size()) * moves);
  }

 private:
  double distance_of(const double* x) const {
    const Eigen::Index nodes = model_.n_nodes();
    if (lazy_) {
      double d = 0.0;
      const double* c = center_.values.data();
      for (Eigen::Index k = 0; k < nodes; ++k) d = std::max(d, std::abs(x[k] - c[k]));
      return d;
    }
    Path p = center_;
    p.values = Eigen::Map<const Eigen::MatrixXd>(x, nodes, model_.dim());
    return distance(p, center_, norm_);
  }

  // Incremental Wiener proposal that stops at the first node leaving the level.
  bool propose_lazy(const double* x, double* out, double rho, double s, double level, RandomStream& rs, double& d) const {
    const Eigen::Index nodes = model_.n_nodes();
    const double step = std::sqrt(model_.dt());
    const double* c = center_.values.data();
    double xi = 0.0;
    out[0] = rho * x[0];
    d = std::abs(out[0] - c[0]);
    if (d > level) return false;
    for (Eigen::Index k = 1; k < nodes; ++k) {
      xi += step * rs.normal();
      out[k] = rho * x[k] + s * xi;
      const double dk = std::abs(out[k] - c[k]);
      if (dk > level) return false;
      d = std::max(d, dk);
    }
    return true;
  }

  bool propose_full(const double* x, double* out, double rho, double s, double level, RandomStream& rs, double& d) const {
    sample_into(model_, rs, out);
    for (Eigen::Index k = 0; k < stride_; ++k) out[k] = rho * x[k] + s * out[k];
    d = distance_of(out);
    return d <= level;
  }

  const GaussianModel& model_;
  const NormSpec& norm_;
  const Path& center_;
  Eigen::Index stride_;
  bool lazy_;
  Eigen::MatrixXd data_;
  std::vector<double> dist_;
};

double adapt(double rho, double acceptance) {
  double gap = 1.0 - rho;
  if (acceptance < 0.15) gap *= 0.5;
  if (acceptance > 0.5) gap = std::min(1.0, 2.0 * gap);
  return 1.0 - gap;
}

// One splitting chain. With an empty ladder the levels are chosen adaptively as
// quantiles of the current population (pilot mode).
ChainOutput run_chain(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                      const std::vector<double>& ladder, const SplittingOptions& opts, int particles,
                      const RandomStream& stream) {
  Population pop(model, norm, center, particles);
  pop.initialize(stream.child(kInitTag));
  const bool adaptive = ladder.empty();
  const double p0 = opts.target_conditional;

  ChainOutput out;
  double rho = opts.rho;
  double level = adaptive ? std::max(eps, quantile(pop.distances(), 0.5)) : ladder.front();
  for (int k = 0;; ++k) {
    if (k >= kMaxLevels) throw LadderError("splitting: too many levels", k);
    const double frac = pop.fraction_within(level);
    if (frac == 0.0)
      throw LadderError("splitting ladder too aggressive: no particle reached level " + std::to_string(k) +
                            " (eps=" + std::to_string(level) + ")",
                        k);
    out.log_prob += std::log(frac);
    out.naive_var += (1.0 - frac) / (frac * particles);
    SplittingLevel info{level, frac, 1.0, rho};

    const bool last = adaptive ? level <= eps : static_cast<std::size_t>(k) + 1 == ladder.size();
    if (last) {
      out.levels.push_back(info);
      break;
    }
    pop.resample_within(level, stream.child(kResampleTag).child(static_cast<std::uint64_t>(k)));
    info.acceptance = pop.refresh(level, rho, opts.moves, stream.child(kMoveTag).child(static_cast<std::uint64_t>(k)));
    out.levels.push_back(info);
    if (opts.adapt_rho) rho = adapt(rho, info.acceptance);

    if (adaptive) {
      const double next = std::max(eps, quantile(pop.distances(), p0));
      level = next < level ? next : std::max(eps, level * (1.0 - 1e-3));
    } else {
      level = ladder[static_cast<std::size_t>(k) + 1];
    }
  }
  return out;
}

void validate(const SplittingOptions& opts, double eps) {
  if (!(eps > 0.0)) throw DomainError("splitting: eps must be positive");
  if (opts.n_particles < 10 || opts.pilot_particles < 10) throw ConfigError("splitting: need at least 10 particles");
  if (!(opts.rho >= 0.0 && opts.rho < 1.0)) throw ConfigError("splitting: rho must lie in [0, 1)");
  if (opts.moves < 1 || opts.replicas < 1) throw ConfigError("splitting: moves and replicas must be >= 1");
  if (!(opts.target_conditional > 0.0 && opts.target_conditional < 1.0))
    throw ConfigError("splitting: target conditional probability must lie in (0, 1)");
}

}  // namespace

std::vector<double> auto_ladder(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                                const SplittingOptions& opts, const RandomStream& stream) {
  validate(opts, eps);
  model.check_shape(center);
  const double step = -std::log(opts.target_conditional);
  const auto analytic = center.values.isZero(0.0) ? sbf_analytic(model, norm, eps) : std::nullopt;
  if (!analytic) {
    std::vector<double> ladder;
    for (const auto& lv : run_chain(model, norm, center, eps, {}, opts, opts.pilot_particles, stream).levels)
      ladder.push_back(lv.eps);
    ladder.back() = eps;
    return ladder;
  }

  auto phi = [&](double e) { return sbf_analytic(model, norm, e)->phi(); };
  // Solves phi(e) = target for e >= eps by bisection in log e.
  auto solve = [&](double target) {
    double lo = std::log(eps), hi = std::log(eps);
    while (phi(std::exp(hi)) > target) hi += 0.5;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(std::exp(mid)) > target ? lo : hi) = mid;
    }
    return std::exp(hi);
  };
  const double start = std::log(2.0);
  const double total = phi(eps);
  if (total <= start) return {eps};
  const int steps = static_cast<int>(std::ceil((total - start) / step));
  std::vector<double> ladder;
  for (int k = 0; k < steps; ++k) ladder.push_back(solve(start + (total - start) * k / steps));
  ladder.push_back(eps);
  return ladder;
}

SplittingResult ball_prob_splitting(const GaussianModel& model, const NormSpec& norm, const Path& center, double eps,
                                    const SplittingOptions& opts, const RandomStream& stream) {
  validate(opts, eps);
  model.check_shape(center);
  norm.validate();
  std::vector<double> ladder = opts.levels;
  if (ladder.empty()) {
    ladder = auto_ladder(model, norm, center, eps, opts, stream.child(kLadderTag));
  } else {
    for (std::size_t i = 1; i < ladder.size(); ++i)
      if (!(ladder[i] < ladder[i - 1])) throw ConfigError("splitting ladder must be strictly decreasing");
    if (std::abs(ladder.back() - eps) > 1e-12 * eps) throw ConfigError("splitting ladder must end at eps");
  }

  std::vector<ChainOutput> runs;
  for (int r = 0; r < opts.replicas; ++r)
    runs.push_back(run_chain(model, norm, center, eps, ladder, opts, opts.n_particles, stream.child(static_cast<std::uint64_t>(r))));

  SplittingResult res;
  res.levels = runs.front().levels;
  ProbEstimate& e = res.estimate;
  e.method = Method::splitting;
  e.n_samples = static_cast<long>(opts.n_particles) * opts.replicas;
  if (runs.size() == 1) {
    e.log_prob = runs.front().log_prob;
    e.stderr_log = std::sqrt(runs.front().naive_var);
    return res;
  }
  // Average probabilities (each replica is unbiased) and take the larger of the spread
  // and the binomial standard error.
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& r : runs) top = std::max(top, r.log_prob);
  std::vector<double> scaled;
  double naive = 0.0;
  for (const auto& r : runs) {
    scaled.push_back(std::exp(r.log_prob - top));
    naive += r.naive_var;
  }
  const double m = mean(scaled);
  const double R = static_cast<double>(runs.size());
  e.log_prob = top + std::log(m);
  e.stderr_log = std::max(standard_error(scaled) / m, std::sqrt(naive / (R * R)));
  return res;
}

}  // namespace smallball
