#pragma once

namespace crcsim {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (inverse CDF), p in (0,1). Accurate to ~1e-15
/// (rational approximation plus one Halley refinement).
double normal_quantile(double p);

/// Regularized incomplete beta function I_x(a, b), x in [0,1], a,b > 0.
double inc_beta(double a, double b, double x);

/// Inverse of inc_beta in x for fixed (a, b): returns x with I_x(a,b) = p.
double inc_beta_inv(double a, double b, double p);

/// log of the normal density at x with the given mean and sd.
double normal_log_pdf(double x, double mean, double sd);

}  // namespace crcsim
