#include "smallball/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "smallball/errors.hpp"

namespace smallball {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Weighting { hard, soft };

struct Problem {
  const Eigen::VectorXd& center;
  double dt;
  Weighting weighting;
  double radius;  // eps for the hard tube, window for the soft functional
  double p;
};

// Backward transfer state after integrating nodes n..1: lattice masses on the support
// of node 1, scaled by exp(log_scale).
class Backward {
 public:
  Backward(const Problem& prob, double cells_per_sigma, double kernel_sigmas)
      : prob_(prob), sigma_(std::sqrt(prob.dt)), h_(sigma_ / cells_per_sigma) {
    const auto reach = static_cast<long>(std::ceil(kernel_sigmas * cells_per_sigma));
    kernel_.resize(2 * reach + 1);
    for (long m = -reach; m <= reach; ++m) kernel_[m + reach] = h_ * density(static_cast<double>(m) * h_);
    reach_ = reach;
    run();
  }

  // log of g_0(x) * E[prod_{k>=1} g_k(X_k) | X_0 = x].
  double log_value_at(double x) const {
    const double first = log_first_weight(x);
    if (first == kNegInf || dead_) return kNegInf;
    double sum = 0.0;
    for (std::size_t j = 0; j < mass_.size(); ++j) {
      if (mass_[j] == 0.0) continue;
      sum += mass_[j] * h_ * density(static_cast<double>(lo_ + static_cast<long>(j)) * h_ - x);
    }
    if (!(sum > 0.0)) return kNegInf;
    return first + std::log(sum) + log_scale_;
  }

  double step() const { return h_; }

  // Admissible range of starting points.
  std::pair<double, double> start_range() const {
    const double w0 = prob_.center[0];
    return {w0 - prob_.radius, w0 + prob_.radius};
  }

 private:
  double density(double z) const {
    return std::exp(-0.5 * z * z / (sigma_ * sigma_)) / (sigma_ * std::sqrt(2.0 * std::numbers::pi));
  }

  double node_weight_factor(Eigen::Index k) const { return k == 0 || k == prob_.center.size() - 1 ? 0.5 : 1.0; }

  double log_first_weight(double x) const {
    const double d = std::abs(x - prob_.center[0]);
    if (prob_.weighting == Weighting::hard) return d <= prob_.radius ? 0.0 : kNegInf;
    if (d > prob_.radius) return kNegInf;
    return -node_weight_factor(0) * prob_.dt * std::pow(d, prob_.p);
  }

  // Lattice indices whose cells meet the support of node k, with the node multipliers.
  void node_multipliers(Eigen::Index k, long& lo, std::vector<double>& mult) const {
    const double lower = prob_.center[k] - prob_.radius;
    const double upper = prob_.center[k] + prob_.radius;
    lo = static_cast<long>(std::ceil(lower / h_ - 0.5));
    const long hi = static_cast<long>(std::floor(upper / h_ + 0.5));
    mult.assign(static_cast<std::size_t>(std::max(0L, hi - lo + 1)), 0.0);
    const double c = node_weight_factor(k) * prob_.dt;
    for (long j = lo; j <= hi; ++j) {
      const double y = static_cast<double>(j) * h_;
      const double overlap = std::min(y + 0.5 * h_, upper) - std::max(y - 0.5 * h_, lower);
      double w = std::clamp(overlap / h_, 0.0, 1.0);
      if (prob_.weighting == Weighting::soft && w > 0.0) w *= std::exp(-c * std::pow(std::abs(y - prob_.center[k]), prob_.p));
      mult[static_cast<std::size_t>(j - lo)] = w;
    }
  }

  void run() {
    const Eigen::Index n = prob_.center.size() - 1;
    if (n < 1) throw ShapeError("transfer: center needs at least two nodes");
    std::vector<double> mult;
    node_multipliers(n, lo_, mult);
    mass_ = mult;
    renormalize();

    std::vector<double> next;
    for (Eigen::Index k = n - 1; k >= 1 && !dead_; --k) {
      long lo_k = 0;
      node_multipliers(k, lo_k, mult);
      next.assign(mult.size(), 0.0);
      const long hi_prev = lo_ + static_cast<long>(mass_.size()) - 1;
      for (std::size_t i = 0; i < mult.size(); ++i) {
        if (mult[i] == 0.0) continue;
        const long yi = lo_k + static_cast<long>(i);
        const long j0 = std::max(lo_, yi - reach_);
        const long j1 = std::min(hi_prev, yi + reach_);
        double acc = 0.0;
        const double* m = mass_.data() + (j0 - lo_);
        const double* kern = kernel_.data() + (j0 - yi + reach_);
        for (long j = j0; j <= j1; ++j) acc += *m++ * *kern++;
        next[i] = mult[i] * acc;
      }
      mass_.swap(next);
      lo_ = lo_k;
      renormalize();
    }
  }

  void renormalize() {
    const double top = mass_.empty() ? 0.0 : *std::max_element(mass_.begin(), mass_.end());
    if (!(top > 0.0)) {
      dead_ = true;
      return;
    }
    for (double& v : mass_) v /= top;
    log_scale_ += std::log(top);
  }

  const Problem& prob_;
  double sigma_;
  double h_;
  long reach_ = 0;
  std::vector<double> kernel_;
  long lo_ = 0;
  std::vector<double> mass_;
  double log_scale_ = 0.0;
  bool dead_ = false;
};

// Golden-section refinement of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, int iterations = 60) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iterations && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
    if (fc >= fd) {
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
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

TransferResult maximize(const Backward& bw) {
  const auto [lo, hi] = bw.start_range();
  const double h = bw.step();
  double best_x = 0.5 * (lo + hi);
  double best = bw.log_value_at(best_x);
  for (double x = std::ceil(lo / h) * h; x <= hi; x += h) {
    const double v = bw.log_value_at(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  if (best == kNegInf) return {kNegInf, 0.0, best_x};
  const auto [x, v] = golden_max([&](double t) { return bw.log_value_at(t); }, std::max(lo, best_x - h),
                                 std::min(hi, best_x + h));
  if (v >= best) return {v, 0.0, x};
  return {best, 0.0, best_x};
}

void validate(const Eigen::VectorXd& center, double dt, const TransferOptions& opts) {
  if (center.size() < 2) throw ShapeError("transfer: center needs at least two nodes");
  if (!(dt > 0.0)) throw DomainError("transfer: dt must be positive");
  if (!(opts.cells_per_sigma >= 1.0) || !(opts.kernel_sigmas >= 4.0) || !(opts.window > 0.0))
    throw ConfigError("transfer: invalid lattice options");
}

template <class Eval>
TransferResult with_error(const TransferOptions& opts, Eval&& eval) {
  TransferResult fine = eval(opts.cells_per_sigma);
  if (opts.error_estimate && std::isfinite(fine.log_value)) {
    const TransferResult coarse = eval(std::max(1.0, 0.5 * opts.cells_per_sigma));
    fine.error = std::isfinite(coarse.log_value) ? std::abs(fine.log_value - coarse.log_value)
                                                 : std::numeric_limits<double>::infinity();
  }
  return fine;
}

}  // namespace

TransferResult tube_log_prob(const Eigen::VectorXd& center, double dt, double eps, double x0, const TransferOptions& opts) {
  validate(center, dt, opts);
  if (!(eps > 0.0)) throw DomainError("tube_log_prob: eps must be positive");
  if (std::abs(x0 - center[0]) > eps) throw DomainError("tube_log_prob: starting point lies outside the tube");
  const Problem prob{center, dt, Weighting::hard, eps, 0.0};
  return with_error(opts, [&](double cps) {
    const Backward bw(prob, cps, opts.kernel_sigmas);
    return TransferResult{bw.log_value_at(x0), 0.0, x0};
  });
}

TransferResult tube_log_prob_sup(const Eigen::VectorXd& center, double dt, double eps, const TransferOptions& opts) {
  validate(center, dt, opts);
  if (!(eps > 0.0)) throw DomainError("tube_log_prob_sup: eps must be positive");
  const Problem prob{center, dt, Weighting::hard, eps, 0.0};
  return with_error(opts, [&](double cps) { return maximize(Backward(prob, cps, opts.kernel_sigmas)); });
}

TransferResult soft_log_expectation(const Eigen::VectorXd& center, double dt, double p, double x0,
                                    const TransferOptions& opts) {
  validate(center, dt, opts);
  if (!(p >= 1.0)) throw DomainError("soft_log_expectation: p must be >= 1");
  const Problem prob{center, dt, Weighting::soft, opts.window, p};
  return with_error(opts, [&](double cps) {
    const Backward bw(prob, cps, opts.kernel_sigmas);
    return TransferResult{bw.log_value_at(x0), 0.0, x0};
  });
}

TransferResult soft_log_expectation_sup(const Eigen::VectorXd& center, double dt, double p, const TransferOptions& opts) {
  validate(center, dt, opts);
  if (!(p >= 1.0)) throw DomainError("soft_log_expectation_sup: p must be >= 1");
  const Problem prob{center, dt, Weighting::soft, opts.window, p};
  return with_error(opts, [&](double cps) { return maximize(Backward(prob, cps, opts.kernel_sigmas)); });
}

}  // namespace smallball
