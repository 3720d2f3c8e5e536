#include "cmm/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmm/util.hpp"

namespace cmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lentz continued fraction for the incomplete beta (Numerical Recipes form).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("betacf: continued fraction did not converge");
}

void check_domain(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0) || !(x <= 1.0) || std::isnan(x))
    throw std::domain_error("incomplete beta: requires a,b > 0 and x in [0,1]");
}

// log I_x(a,b) assuming x is on the "direct" side of the continued fraction,
// i.e. x < (a+1)/(a+b+2).
double log_reg_lower_direct(double x, double a, double b) {
  if (x <= 0.0) return -kInf;
  const double lead =
      a * std::log(x) + b * std::log1p(-x) - std::log(a) - log_beta(a, b);
  return lead + std::log(betacf(a, b, x));
}

}  // namespace

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_reg_inc_beta_lower(double x, double a, double b) {
  check_domain(x, a, b);
  if (x <= 0.0) return -kInf;
  if (x >= 1.0) return 0.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return log_reg_lower_direct(x, a, b);
  // Complement side: 1 - I_{1-x}(b, a), where the swapped tail is small.
  const double log_comp = log_reg_lower_direct(1.0 - x, b, a);
  return std::log1p(-std::exp(log_comp));
}

double log_reg_inc_beta_upper(double x, double a, double b) {
  check_domain(x, a, b);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return -kInf;
  if (1.0 - x < (b + 1.0) / (a + b + 2.0)) return log_reg_lower_direct(1.0 - x, b, a);
  const double log_lower = log_reg_lower_direct(x, a, b);
  return std::log1p(-std::exp(log_lower));
}

double log_inc_beta_upper(double x, double a, double b) {
  return log_beta(a, b) + log_reg_inc_beta_upper(x, a, b);
}

double trunc_beta_cdf(double x, double a, double b, double lower_bound) {
  if (!(lower_bound >= 0.0) || !(lower_bound < 1.0))
    throw std::domain_error("trunc_beta_cdf: lower_bound must lie in [0,1)");
  if (x <= lower_bound) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_tail_lb = log_reg_inc_beta_upper(lower_bound, a, b);
  const double log_tail_x = log_reg_inc_beta_upper(x, a, b);
  // F(x) = 1 - U(x)/U(lb), all handled in log space so deep tails survive.
  return -std::expm1(log_tail_x - log_tail_lb);
}

double inv_trunc_beta_cdf(double u, double a, double b, double lower_bound) {
  if (!(lower_bound >= 0.0) || !(lower_bound < 1.0))
    throw std::domain_error("inv_trunc_beta_cdf: lower_bound must lie in [0,1)");
  if (!(u >= 0.0) || !(u <= 1.0)) throw std::domain_error("inv_trunc_beta_cdf: u outside [0,1]");
  if (u <= 0.0) return lower_bound;
  if (u >= 1.0) return 1.0;

  const double log_tail_lb = log_reg_inc_beta_upper(lower_bound, a, b);
  if (!std::isfinite(log_tail_lb))
    throw NumericError("inv_trunc_beta_cdf: zero mass above lower_bound");
  const double target = std::log1p(-u);  // want U(x)/U(lb) = 1-u

  double lo = lower_bound, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = log_reg_inc_beta_upper(mid, a, b) - log_tail_lb;
    if (g > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cmm
