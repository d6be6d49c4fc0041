#pragma once

#include <cmath>
#include <span>

namespace taskmix {

/// Digamma function psi(x) = d/dx log Gamma(x) for x > 0.
/// Accurate to ~1e-12 over the positive reals. Throws std::domain_error
/// for x <= 0 or non-finite input.
double digamma(double x);

/// log Beta(a, b) for a, b > 0.
double lbeta(double a, double b);

/// Differential entropy of a Beta(a, b) distribution.
double beta_entropy(double a, double b);

/// Numerically stable logistic function 1 / (1 + exp(-x)).
double logistic(double x);

/// Numerically stable log of the logistic function.
double log_logistic(double x);

/// Curvature coefficient of the quadratic logistic bound:
/// tanh(xi/2) / (4 xi), extended by continuity to 1/8 at xi = 0.
double jj_lambda(double xi);

/// Quadratic lower bound on log logistic(a) with tightness parameter
/// xi >= 0. Equals log logistic(a) exactly when xi = |a|. Throws
/// std::domain_error for xi < 0 or non-finite input.
double jj_lower_bound(double a, double xi);

/// log(sum_i exp(v_i)), stable against overflow. Returns -inf for an
/// empty span.
double log_sum_exp(std::span<const double> v);

/// x * log(x) with the continuity convention 0 * log(0) = 0.
double xlogx(double x);

/// Binary entropy -p log p - (1-p) log(1-p) for p in [0, 1].
double binary_entropy(double p);

}  // namespace taskmix
