#pragma once

#include <Eigen/Core>

#include "taskmix/types.hpp"

namespace taskmix {

/// Ridge penalty applied by the per-task maximum-likelihood solvers. Kept
/// tiny: it only pins down underdetermined directions when N_t < D.
inline constexpr double kSingleTaskRidge = 1.0;

/// Penalized maximum-likelihood weights for one task.
///
/// Regression solves (X'X + penalty I) w = X'y in closed form;
/// classification maximizes the logistic log likelihood minus
/// (penalty/2) ||w||^2 numerically. Both are deterministic and succeed
/// for any N_t >= 0, including underdetermined tasks.
Eigen::VectorXd fit_single_task(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& y, TaskType type,
                                double penalty = kSingleTaskRidge);

}  // namespace taskmix
