#pragma once

#include <Eigen/Core>
#include <functional>

namespace taskmix {

struct LbfgsOptions {
  int max_iters = 200;
  int memory = 8;
  double grad_tol = 1e-8;     // stop when the gradient inf-norm drops below
  double armijo_c1 = 1e-4;    // sufficient-increase constant
  double step_shrink = 0.5;   // backtracking factor
  int max_backtracks = 50;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iters = 0;
  bool converged = false;  // gradient tolerance reached
};

/// Maximizes a smooth objective with limited-memory BFGS directions and an
/// Armijo backtracking line search. `fg` must write the gradient into its
/// second argument and return the objective value. The returned iterate
/// never has a lower objective than the starting point.
LbfgsResult lbfgs_maximize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
    const Eigen::VectorXd& x0, const LbfgsOptions& options = {});

}  // namespace taskmix
