#pragma once

#include <Eigen/Dense>

namespace smallball {

// Deterministic lattice path integral for a one-dimensional Brownian motion observed on
// a uniform grid. The chain X_0 = x, X_{k+1} = X_k + sqrt(dt) Z_k is integrated against
// node weights g_k through a Gaussian transfer kernel on the absolute lattice
// y_j = j * h, h = sqrt(dt) / cells_per_sigma. Cells cut by the support boundary
// contribute the fraction lying inside.
struct TransferOptions {
  double cells_per_sigma = 4.0;
  double kernel_sigmas = 8.0;
  // Soft functional: lattice window |y - w_k| <= window around the center.
  double window = 6.0;
  // Repeat at half resolution and report the difference as the error.
  bool error_estimate = true;
};

struct TransferResult {
  double log_value = 0.0;
  double error = 0.0;   // |value(cps) - value(cps / 2)| in log units, 0 if not requested
  double x_star = 0.0;  // starting point used (maximizer for the sup variants)
};

// log P(|x0 + W(t_k) - w_k| <= eps for every node k).
TransferResult tube_log_prob(const Eigen::VectorXd& center, double dt, double eps, double x0,
                             const TransferOptions& opts = {});
// sup over x0 of the same quantity, with the maximizer.
TransferResult tube_log_prob_sup(const Eigen::VectorXd& center, double dt, double eps, const TransferOptions& opts = {});

// log E exp(-sum_k c_k dt |x0 + W(t_k) - w_k|^p), c_k the trapezoid weights (1/2 at the
// ends): the discrete form of log E exp(-||x0 + W - w||_p^p).
TransferResult soft_log_expectation(const Eigen::VectorXd& center, double dt, double p, double x0,
                                    const TransferOptions& opts = {});
TransferResult soft_log_expectation_sup(const Eigen::VectorXd& center, double dt, double p,
                                        const TransferOptions& opts = {});

}  // namespace smallball
