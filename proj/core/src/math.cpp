#include "taskmix/math.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace taskmix {

double digamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("digamma: requires finite x > 0");
  }
  // Shift x upward with psi(x) = psi(x+1) - 1/x until the asymptotic
  // expansion is accurate, then apply the Bernoulli-number series.
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = std::log(x) - 0.5 * inv;
  double p = inv2;
  series -= p * (1.0 / 12.0);
  p *= inv2;
  series += p * (1.0 / 120.0);
  p *= inv2;
  series -= p * (1.0 / 252.0);
  p *= inv2;
  series += p * (1.0 / 240.0);
  p *= inv2;
  series -= p * (1.0 / 132.0);
  p *= inv2;
  series += p * (691.0 / 32760.0);
  p *= inv2;
  series -= p * (1.0 / 12.0);
  return acc + series;
}

double lbeta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("lbeta: requires a > 0 and b > 0");
  }
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_entropy(double a, double b) {
  return lbeta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
         (a + b - 2.0) * digamma(a + b);
}

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  if (x >= 0.0) {
    return -std::log1p(std::exp(-x));
  }
  return x - std::log1p(std::exp(x));
}

double jj_lambda(double xi) {
  const double a = std::abs(xi);
  if (a < 1e-4) {
    return 0.125 - a * a / 96.0;
  }
  return std::tanh(a / 2.0) / (4.0 * a);
}

double jj_lower_bound(double a, double xi) {
  if (!std::isfinite(a) || !std::isfinite(xi) || xi < 0.0) {
    throw std::domain_error("jj_lower_bound: requires finite a and xi >= 0");
  }
  return log_logistic(xi) + 0.5 * (a - xi) - jj_lambda(xi) * (a * a - xi * xi);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) {
    return m;
  }
  double s = 0.0;
  for (double x : v) {
    s += std::exp(x - m);
  }
  return m + std::log(s);
}

double xlogx(double x) {
  if (x == 0.0) {
    return 0.0;
  }
  return x * std::log(x);
}

double binary_entropy(double p) {
  return -xlogx(p) - xlogx(1.0 - p);
}

}  // namespace taskmix
