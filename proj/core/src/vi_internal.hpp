#pragma once

#include <Eigen/Core>

#include "taskmix/types.hpp"
#include "taskmix/vi.hpp"

namespace taskmix::detail {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// nu_lambda[f] * (nu_s odot nu_b) for task t: the factor part of the
/// component-implied mean of theta_t under component f.
Eigen::VectorXd factor_mean(const VariationalState& state, Eigen::Index t,
                            Eigen::Index f);

/// Variance contribution of the factor block to E||theta_t - mu_f -
/// Lambda_f (s odot b)||^2 beyond the squared mean residual and the 2D
/// term from the theta and mu covariances.
double factor_second_moment(const VariationalState& state, Eigen::Index t,
                            Eigen::Index f);

/// E_Q ||theta_t - mu_f - Lambda_f (s odot b)||^2.
double expected_residual_sq(const VariationalState& state, Eigen::Index t,
                            Eigen::Index f);

/// E_Q log p(theta_t | z_t = f) under the current posterior.
double expected_log_ptheta(const VariationalState& state, Eigen::Index t,
                           Eigen::Index f);

/// E_Q log of each component's stick-breaking weight. The last component
/// takes the leftover stick, so its own log-proportion term is 0.
Eigen::VectorXd expected_log_sticks(const VariationalState& state);

/// Bound terms that depend on task t's weight mean, up to an additive
/// constant; writes the gradient when grad is non-null.
double theta_objective(const VariationalState& state,
                       const MultitaskDataset& data, Eigen::Index t,
                       const Eigen::VectorXd& theta, Eigen::VectorXd* grad);

}  // namespace taskmix::detail
