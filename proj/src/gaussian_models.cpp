#include "smallball/gaussian_models.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "smallball/errors.hpp"

namespace smallball {

Path Path::on_grid(Eigen::MatrixXd values, double dt) {
  if (!(dt > 0.0)) throw ShapeError("Path: dt must be positive");
  if (values.rows() < 1 || values.cols() < 1) throw ShapeError("Path: empty values");
  return Path{std::move(values), dt, true};
}

Path Path::coordinates(Eigen::VectorXd x) {
  if (x.size() < 1) throw ShapeError("Path: empty coordinates");
  return Path{Eigen::MatrixXd(x), 1.0, false};
}

namespace {
void require_same_shape(const Path& a, const Path& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols() || a.timed != b.timed ||
      (a.timed && std::abs(a.dt - b.dt) > 1e-12 * a.dt))
    throw ShapeError("Path arithmetic: shape mismatch");
}
}  // namespace

Path operator+(const Path& a, const Path& b) {
  require_same_shape(a, b);
  return Path{a.values + b.values, a.dt, a.timed};
}

Path operator-(const Path& a, const Path& b) {
  require_same_shape(a, b);
  return Path{a.values - b.values, a.dt, a.timed};
}

Path operator*(double c, const Path& a) { return Path{c * a.values, a.dt, a.timed}; }

GaussianModel GaussianModel::scalar(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("scalar model: sigma must be positive");
  GaussianModel m;
  m.kind_ = ModelKind::scalar;
  m.sigma_ = sigma;
  return m;
}

GaussianModel GaussianModel::finite_spectrum(Eigen::VectorXd lambdas) {
  if (lambdas.size() < 1) throw ConfigError("finite spectrum: need at least one eigenvalue");
  if ((lambdas.array() <= 0.0).any()) throw ConfigError("finite spectrum: eigenvalues must be positive");
  GaussianModel m;
  m.kind_ = ModelKind::finite_spectrum;
  m.lambdas_ = std::move(lambdas);
  return m;
}

GaussianModel GaussianModel::wiener(int grid_n, double horizon, int dim) {
  if (grid_n < 1) throw ConfigError("wiener model: grid n must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("wiener model: horizon must be positive");
  if (dim < 1) throw ConfigError("wiener model: dimension must be >= 1");
  GaussianModel m;
  m.kind_ = ModelKind::wiener;
  m.grid_n_ = grid_n;
  m.horizon_ = horizon;
  m.dim_ = dim;
  return m;
}

GaussianModel GaussianModel::brownian_bridge(int grid_n) {
  if (grid_n < 1) throw ConfigError("bridge model: grid n must be >= 1");
  GaussianModel m;
  m.kind_ = ModelKind::brownian_bridge;
  m.grid_n_ = grid_n;
  return m;
}

Eigen::Index GaussianModel::n_nodes() const {
  switch (kind_) {
    case ModelKind::scalar: return 1;
    case ModelKind::finite_spectrum: return lambdas_.size();
    default: return grid_n_ + 1;
  }
}

GaussianModel GaussianModel::with_horizon(double horizon) const {
  if (kind_ != ModelKind::wiener) throw ConfigError("with_horizon: only defined for the Wiener model");
  const double steps = horizon / dt();
  const long n = std::lround(steps);
  if (n < 1 || std::abs(steps - n) > 1e-9 * steps)
    throw ConfigError("with_horizon: horizon must be a multiple of the step");
  return wiener(static_cast<int>(n), horizon, dim_);
}

Path GaussianModel::zero_path() const {
  if (is_path_model()) return Path::on_grid(Eigen::MatrixXd::Zero(n_nodes(), dim_), dt());
  return Path::coordinates(Eigen::VectorXd::Zero(n_nodes()));
}

void GaussianModel::check_shape(const Path& p) const {
  const bool ok = is_path_model()
                      ? (p.timed && p.n_nodes() == n_nodes() && p.dim() == dim_ && std::abs(p.dt - dt()) <= 1e-12 * dt())
                      : (!p.timed && p.n_nodes() == n_nodes() && p.dim() == 1);
  if (!ok) throw ShapeError("path does not match the model grid (" + describe() + ")");
}

std::string GaussianModel::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case ModelKind::scalar: out << "scalar(sigma=" << sigma_ << ")"; break;
    case ModelKind::finite_spectrum: out << "spectrum(k=" << lambdas_.size() << ")"; break;
    case ModelKind::wiener: out << "wiener(d=" << dim_ << ",T=" << horizon_ << ",n=" << grid_n_ << ")"; break;
    case ModelKind::brownian_bridge: out << "bridge(n=" << grid_n_ << ")"; break;
  }
  return out.str();
}

void sample_into(const GaussianModel& model, RandomStream& stream, double* out) {
  switch (model.kind()) {
    case ModelKind::scalar:
      out[0] = model.sigma() * stream.normal();
      return;
    case ModelKind::finite_spectrum: {
      const auto& lam = model.lambdas();
      for (Eigen::Index k = 0; k < lam.size(); ++k) out[k] = std::sqrt(lam[k]) * stream.normal();
      return;
    }
    case ModelKind::wiener: {
      const Eigen::Index nodes = model.n_nodes();
      const double step = std::sqrt(model.dt());
      for (int c = 0; c < model.dim(); ++c) {
        double* col = out + c * nodes;
        col[0] = 0.0;
        for (Eigen::Index k = 1; k < nodes; ++k) col[k] = col[k - 1] + step * stream.normal();
      }
      return;
    }
    case ModelKind::brownian_bridge: {
      // Exact conditioning of a Wiener path on W(1) = 0.
      const Eigen::Index nodes = model.n_nodes();
      const double step = std::sqrt(model.dt());
      out[0] = 0.0;
      for (Eigen::Index k = 1; k < nodes; ++k) out[k] = out[k - 1] + step * stream.normal();
      const double end = out[nodes - 1];
      for (Eigen::Index k = 1; k < nodes; ++k) out[k] -= model.dt() * static_cast<double>(k) * end;
      out[nodes - 1] = 0.0;
      return;
    }
  }
}

Path sample_path(const GaussianModel& model, RandomStream& stream) {
  Path p = model.zero_path();
  sample_into(model, stream, p.values.data());
  return p;
}

std::vector<Path> sample(const GaussianModel& model, const RandomStream& stream, int count) {
  if (count < 1) throw ConfigError("sample: count must be >= 1");
  std::vector<Path> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    RandomStream s = stream.child(static_cast<std::uint64_t>(i));
    out.push_back(sample_path(model, s));
  }
  return out;
}

double rkhs_norm(const GaussianModel& model, const Path& h) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (model.kind()) {
    case ModelKind::scalar:
      if (h.timed || h.n_nodes() != 1) throw ShapeError("rkhs_norm: scalar model expects one coordinate");
      return std::abs(h.values(0, 0)) / model.sigma();
    case ModelKind::finite_spectrum: {
      if (h.timed || h.dim() != 1) throw ShapeError("rkhs_norm: spectrum model expects coordinates");
      const auto& lam = model.lambdas();
      double sum = 0.0;
      for (Eigen::Index k = 0; k < h.n_nodes(); ++k) {
        const double x = h.values(k, 0);
        if (k >= lam.size()) {
          if (x != 0.0) return inf;
          continue;
        }
        sum += x * x / lam[k];
      }
      return std::sqrt(sum);
    }
    case ModelKind::wiener:
    case ModelKind::brownian_bridge: {
      model.check_shape(h);
      if ((h.values.row(0).array() != 0.0).any()) return inf;
      if (model.kind() == ModelKind::brownian_bridge && h.values(h.n_nodes() - 1, 0) != 0.0) return inf;
      // Energy of the piecewise-linear interpolant.
      const Eigen::MatrixXd increments = h.values.bottomRows(h.n_nodes() - 1) - h.values.topRows(h.n_nodes() - 1);
      return std::sqrt(increments.squaredNorm() / h.dt);
    }
  }
  return inf;
}

CmShift make_shift(const GaussianModel& model, Path h) {
  const double norm = rkhs_norm(model, h);
  if (!std::isfinite(norm)) throw DomainError("shift is not an element of the Cameron-Martin space");
  return CmShift{std::move(h), norm};
}

double paley_wiener(const GaussianModel& model, const Path& h, const Path& y) {
  model.check_shape(y);
  switch (model.kind()) {
    case ModelKind::scalar:
      return h.values(0, 0) * y.values(0, 0) / (model.sigma() * model.sigma());
    case ModelKind::finite_spectrum: {
      const auto& lam = model.lambdas();
      double z = 0.0;
      for (Eigen::Index k = 0; k < std::min(h.n_nodes(), lam.size()); ++k) z += h.values(k, 0) * y.values(k, 0) / lam[k];
      return z;
    }
    default: {
      model.check_shape(h);
      // int h'(t) dy(t) with h' constant on each grid cell.
      const Eigen::Index n = y.n_nodes() - 1;
      const Eigen::MatrixXd dh = h.values.bottomRows(n) - h.values.topRows(n);
      const Eigen::MatrixXd dy = y.values.bottomRows(n) - y.values.topRows(n);
      return dh.cwiseProduct(dy).sum() / h.dt;
    }
  }
}

double cm_log_weight(const GaussianModel& model, const CmShift& shift, const Path& y) {
  if (!std::isfinite(shift.rkhs_norm)) throw DomainError("cm_weight: shift has infinite RKHS norm");
  return paley_wiener(model, shift.h, y) - 0.5 * shift.rkhs_norm * shift.rkhs_norm;
}

double cm_weight(const GaussianModel& model, const CmShift& shift, const Path& y) {
  return std::exp(cm_log_weight(model, shift, y));
}

}  // namespace smallball
