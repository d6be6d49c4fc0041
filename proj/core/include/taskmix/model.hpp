#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "taskmix/types.hpp"

namespace taskmix {

/// One joint draw of all latent variables from the generative model.
///
/// Component indices in `z` are 0-based. Per task, only the factor scores
/// and activations of its drawn component enter theta; they are stored as
/// T x K with row t belonging to component z[t].
struct GenerativeDraw {
  Eigen::MatrixXd theta;                // T x D
  Eigen::MatrixXd mu;                   // F x D
  std::vector<Eigen::MatrixXd> lambda;  // F matrices, each D x K
  Eigen::MatrixXd s;                    // T x K
  Eigen::MatrixXi b;                    // T x K, entries in {0, 1}
  std::vector<int> z;                   // T, entries in [0, F)
  Eigen::VectorXd phi;                  // F stick proportions, phi[F-1] = 1
  Eigen::MatrixXd beta;                 // F x K activation probabilities
  double sigma = 1.0;                   // precision of theta around its
                                        // component-implied mean
};

/// Samples the full latent hierarchy for T tasks of dimension D.
///
/// Draw order is fixed (phi, beta, mu, lambda, z, s, b, theta) so a seed
/// identifies the draw exactly. Throws InvalidArgument for T < 1, D < 1,
/// sigma <= 0, or invalid hyperparameters.
GenerativeDraw sample_prior(const Hyperparameters& h, Eigen::Index num_tasks,
                            Eigen::Index feature_dim, std::uint64_t seed,
                            double sigma = 1.0);

/// Gaussian log likelihood of responses y given features x and weights
/// theta, with unit noise variance. Throws InvalidArgument on dimension
/// mismatch.
double loglik_regression(const Eigen::VectorXd& theta,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

}  // namespace taskmix
