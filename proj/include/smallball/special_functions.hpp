#pragma once

namespace smallball {

// Standard normal distribution function and tail.
double normal_cdf(double x);
double normal_tail(double x);
double log_normal_cdf(double x);
double normal_pdf(double x);
// Inverse of normal_cdf (Wichura AS241, ~1e-16 relative accuracy).
double normal_quantile(double p);

// log P(sup_{0<=t<=1} |W(t)| <= eps) for standard Brownian motion.
double log_sup_brownian_small_ball(double eps);
// log P(sup_{0<=t<=1} |B(t)| <= eps) for the standard Brownian bridge.
double log_sup_bridge_small_ball(double eps);

// E|Z|^m for a standard normal Z and real m > -1.
double normal_abs_moment(double m);

}  // namespace smallball
