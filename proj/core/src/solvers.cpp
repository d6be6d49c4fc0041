#include "taskmix/solvers.hpp"

#include <Eigen/Cholesky>

#include "taskmix/errors.hpp"
#include "taskmix/math.hpp"
#include "taskmix/optimize.hpp"

namespace taskmix {

Eigen::VectorXd fit_single_task(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& y, TaskType type,
                                double penalty) {
  if (x.rows() != y.size()) {
    throw InvalidArgument("fit_single_task: row/response count mismatch");
  }
  if (!(penalty > 0.0)) {
    throw InvalidArgument("fit_single_task: penalty must be > 0");
  }
  const Eigen::Index d = x.cols();
  if (type == TaskType::regression) {
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += penalty;
    return Eigen::LDLT<Eigen::MatrixXd>(gram).solve(x.transpose() * y);
  }

  const auto objective = [&](const Eigen::VectorXd& w,
                             Eigen::VectorXd& grad) -> double {
    const Eigen::VectorXd activation = x * w;
    double value = -0.5 * penalty * w.squaredNorm();
    grad = -penalty * w;
    for (Eigen::Index i = 0; i < activation.size(); ++i) {
      // log p(y | a) = y a + log logistic(-a)
      value += y[i] * activation[i] + log_logistic(-activation[i]);
    }
    grad.noalias() +=
        x.transpose() * (y - activation.unaryExpr([](double a) {
                               return logistic(a);
                             }));
    return value;
  };

  LbfgsOptions options;
  options.max_iters = 500;
  options.grad_tol = 1e-8;
  return lbfgs_maximize(objective, Eigen::VectorXd::Zero(d), options).x;
}

}  // namespace taskmix
