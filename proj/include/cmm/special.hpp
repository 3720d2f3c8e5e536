#pragma once

namespace cmm {

// log B(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b).
double log_beta(double a, double b);

// Log of the regularized incomplete beta I_x(a, b), lower tail.
double log_reg_inc_beta_lower(double x, double a, double b);

// Log of the regularized upper tail 1 - I_x(a, b).
double log_reg_inc_beta_upper(double x, double a, double b);

// log of the unnormalized upper integral  integral_x^1 w^(a-1) (1-w)^(b-1) dw.
double log_inc_beta_upper(double x, double a, double b);

// Quantile of a Beta(a, b) truncated to [lower_bound, 1], evaluated at u.
// Monotone in u; u=0 maps to lower_bound, u=1 maps to 1.
double inv_trunc_beta_cdf(double u, double a, double b, double lower_bound);

// CDF of the truncated Beta(a, b) on [lower_bound, 1]; inverse of the above.
double trunc_beta_cdf(double x, double a, double b, double lower_bound);

}  // namespace cmm
