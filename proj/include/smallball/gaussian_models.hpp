#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smallball/random.hpp"

namespace smallball {

// A sample or deterministic element of the sample space. Path models store one row per
// grid node (t_k = k * dt, k = 0..n) and one column per coordinate; vector models
// (scalar, finite spectrum) store their coordinates as a single column and have no
// time structure.
struct Path {
  Eigen::MatrixXd values;
  double dt = 1.0;
  bool timed = true;

  static Path on_grid(Eigen::MatrixXd values, double dt);
  static Path coordinates(Eigen::VectorXd x);

  Eigen::Index n_nodes() const { return values.rows(); }
  int dim() const { return static_cast<int>(values.cols()); }
  double horizon() const { return timed ? dt * static_cast<double>(values.rows() - 1) : 0.0; }
  double time(Eigen::Index k) const { return dt * static_cast<double>(k); }
};

Path operator+(const Path& a, const Path& b);
Path operator-(const Path& a, const Path& b);
Path operator*(double c, const Path& a);

enum class ModelKind { scalar, finite_spectrum, wiener, brownian_bridge };

// Centered Gaussian law with its Cameron-Martin structure. Path models use a uniform
// grid with step horizon / n that includes t = 0.
class GaussianModel {
 public:
  static GaussianModel scalar(double sigma);
  static GaussianModel finite_spectrum(Eigen::VectorXd lambdas);
  static GaussianModel wiener(int grid_n, double horizon = 1.0, int dim = 1);
  static GaussianModel brownian_bridge(int grid_n);

  ModelKind kind() const { return kind_; }
  bool is_path_model() const { return kind_ == ModelKind::wiener || kind_ == ModelKind::brownian_bridge; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& lambdas() const { return lambdas_; }
  int dim() const { return dim_; }
  double horizon() const { return horizon_; }
  int grid_n() const { return grid_n_; }
  double dt() const { return horizon_ / grid_n_; }
  Eigen::Index n_nodes() const;

  // Same law on a different horizon (Wiener only), keeping the step size.
  GaussianModel with_horizon(double horizon) const;

  Path zero_path() const;
  // Rejects a path whose shape does not match the model grid.
  void check_shape(const Path& p) const;
  std::string describe() const;

 private:
  GaussianModel() = default;

  ModelKind kind_ = ModelKind::scalar;
  double sigma_ = 1.0;
  Eigen::VectorXd lambdas_;
  int dim_ = 1;
  double horizon_ = 1.0;
  int grid_n_ = 1;
};

// One draw, consuming normals from the stream in node order.
Path sample_path(const GaussianModel& model, RandomStream& stream);
// Writes a draw into raw storage laid out like Path::values (column-major).
void sample_into(const GaussianModel& model, RandomStream& stream, double* out);

// count i.i.d. draws; draw i uses stream.child(i), so results never depend on
// execution order or worker count.
std::vector<Path> sample(const GaussianModel& model, const RandomStream& stream, int count);

// Cameron-Martin norm |h|_mu; +infinity when h is not in the RKHS (nonzero start for
// path models, nonzero bridge endpoint, coordinates outside the spectrum).
double rkhs_norm(const GaussianModel& model, const Path& h);

// An admissible shift h together with its RKHS norm.
struct CmShift {
  Path h;
  double rkhs_norm = 0.0;
};

CmShift make_shift(const GaussianModel& model, Path h);

// Paley-Wiener functional z_h(y) = <h, y>_mu, linear in y.
double paley_wiener(const GaussianModel& model, const Path& h, const Path& y);

// log of d(law of X + h)/d(law of X) at y: z_h(y) - |h|^2 / 2.
double cm_log_weight(const GaussianModel& model, const CmShift& shift, const Path& y);
double cm_weight(const GaussianModel& model, const CmShift& shift, const Path& y);

}  // namespace smallball
