#include "taskmix/optimize.hpp"

#include <cmath>
#include <deque>

#include "taskmix/errors.hpp"

namespace taskmix {

namespace {

struct Correction {
  Eigen::VectorXd s;  // iterate difference
  Eigen::VectorXd y;  // gradient difference
  double rho = 0.0;   // 1 / (y . s)
};

// Two-loop recursion for an ascent direction H * g, where H approximates
// the inverse Hessian of the negated (convex) problem.
Eigen::VectorXd two_loop_direction(const std::deque<Correction>& mem,
                                   const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    const double gamma = last.s.dot(last.y) / last.y.squaredNorm();
    q *= gamma;
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult lbfgs_maximize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
    const Eigen::VectorXd& x0, const LbfgsOptions& options) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd grad(x.size());
  double value = fg(x, grad);
  if (!std::isfinite(value)) {
    throw NumericalError("lbfgs_maximize: non-finite objective at start");
  }

  std::deque<Correction> mem;
  LbfgsResult result;
  result.x = x;
  result.value = value;

  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd dir = two_loop_direction(mem, grad);
    double slope = dir.dot(grad);
    if (!(slope > 0.0) || !dir.allFinite()) {
      // The curvature model failed to produce an ascent direction; fall
      // back to steepest ascent.
      dir = grad;
      slope = grad.squaredNorm();
      mem.clear();
    }

    double step = 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd grad_new(x.size());
    double value_new = value;
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      x_new = x + step * dir;
      value_new = fg(x_new, grad_new);
      if (std::isfinite(value_new) &&
          value_new >= value + options.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= options.step_shrink;
    }
    if (!accepted) {
      // No ascent found along this direction at any tried step; keep the
      // current (best) iterate.
      break;
    }

    Correction corr;
    corr.s = x_new - x;
    corr.y = grad_new - grad;
    const double sy = corr.s.dot(corr.y);
    // For a maximization, s . (grad_new - grad) is negative on a concave
    // stretch; store the negated pair so the two-loop recursion sees the
    // convention of the equivalent minimization.
    if (sy < -1e-12) {
      corr.y = -corr.y;
      corr.rho = 1.0 / (-sy);
      mem.push_back(std::move(corr));
      if (static_cast<int>(mem.size()) > options.memory) {
        mem.pop_front();
      }
    }

    x = std::move(x_new);
    grad = std::move(grad_new);
    value = value_new;
    result.iters = iter + 1;
    if (value >= result.value) {
      result.x = x;
      result.value = value;
    }
  }
  if (!result.converged &&
      grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
    result.converged = true;
  }
  return result;
}

}  // namespace taskmix
