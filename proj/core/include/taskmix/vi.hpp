#pragma once

#include <Eigen/Core>
#include <vector>

#include "taskmix/types.hpp"

namespace taskmix {

/// Additive pieces of the evidence lower bound, for diagnostics. All
/// normalizing constants are kept so the total is a true lower bound on
/// the log evidence.
struct ElboTerms {
  double likelihood = 0.0;
  double theta_prior = 0.0;
  double mu_prior = 0.0;
  double lambda_prior = 0.0;
  double s_prior = 0.0;
  double b_prior = 0.0;
  double beta_prior = 0.0;
  double z_prior = 0.0;
  double phi_prior = 0.0;
  double entropy_z = 0.0;
  double entropy_b = 0.0;
  double entropy_beta = 0.0;
  double entropy_phi = 0.0;
  double entropy_gaussian = 0.0;

  double total() const;
  /// Name of the first non-finite term, or an empty string if all are
  /// finite.
  const char* first_non_finite() const;
};

/// Mean-field posterior over all latent variables.
///
/// Every Gaussian factor has identity covariance, so a mean is a complete
/// description. Factor scores and activations are kept per task AND per
/// component (nu_s[t] and nu_b[t] are F x K), which is what makes each
/// coordinate update closed-form.
struct VariationalState {
  TaskType task_type = TaskType::regression;
  Eigen::MatrixXd nu_theta;                // T x D task weight means
  Eigen::MatrixXd nu_mu;                   // F x D component mean means
  std::vector<Eigen::MatrixXd> nu_lambda;  // F matrices, D x K loading means
  std::vector<Eigen::MatrixXd> nu_s;       // T matrices, F x K score means
  std::vector<Eigen::MatrixXd> nu_b;       // T matrices, F x K activation
                                           // probabilities in [0, 1]
  Eigen::MatrixXd nu_z;                    // T x F assignment probabilities;
                                           // rows sum to 1
  Eigen::MatrixXd gamma;                   // F x 2 stick Beta parameters; the
                                           // last stick is deterministic and
                                           // its row is ignored
  Eigen::MatrixXd rho1;                    // F x K activation Beta parameters
  Eigen::MatrixXd rho2;                    // F x K
  double sigma = 1.0;                      // shared precision of task weights
                                           // around component-implied means
  std::vector<Eigen::VectorXd> xi;         // T vectors, N_t bound tightness
                                           // parameters (classification only)
  std::vector<double> elbo_trace;

  Eigen::Index num_tasks() const { return nu_theta.rows(); }
  Eigen::Index feature_dim() const { return nu_theta.cols(); }
  Eigen::Index num_components() const { return nu_mu.rows(); }
  Eigen::Index num_factors() const { return rho1.cols(); }

  /// Throws InvalidArgument on inconsistent shapes; throws NumericalError
  /// if probabilities leave [0, 1], assignment rows fail to sum to 1, or
  /// any positivity constraint breaks.
  void validate() const;
};

/// Deterministic starting point: per-task penalized maximum-likelihood
/// weights, uniform assignments, component means seeded from the task
/// weights (in seeded shuffled order) plus small noise, small random
/// loadings, neutral Beta parameters, sigma = 1. Throws InvalidArgument
/// for an empty dataset or invalid hyperparameters.
VariationalState init_state(const MultitaskDataset& data,
                            const Hyperparameters& h);

/// Coordinate updates. Each one sets its block to the exact maximizer of
/// the bound given every other block (for classification, the bound with
/// the current tightness parameters), except update_sigma, whose moment
/// formula is not the bound maximizer; the fitting loop guards it.
void update_gamma(VariationalState& state, const Hyperparameters& h);
void update_z(VariationalState& state);
void update_rho(VariationalState& state, const Hyperparameters& h);
void update_b(VariationalState& state);
void update_s(VariationalState& state);
void update_lambda(VariationalState& state);
void update_mu(VariationalState& state);
void update_sigma(VariationalState& state);
void update_xi(VariationalState& state, const MultitaskDataset& data);

/// Gradient of the bound with respect to one task's weight mean.
Eigen::VectorXd theta_gradient(const VariationalState& state,
                               const MultitaskDataset& data, Eigen::Index t);

struct OptimizeThetaResult {
  int iters = 0;
  bool converged = false;
};

/// Maximizes the bound over one task's weight mean (quasi-Newton with a
/// backtracking line search, warm-started from the current value). The
/// bound never decreases; non-convergence within the iteration cap keeps
/// the best iterate and reports converged = false.
OptimizeThetaResult optimize_theta(VariationalState& state,
                                   const MultitaskDataset& data,
                                   Eigen::Index t, double grad_tol);

/// Evidence lower bound of the state on the data. For an empty dataset
/// the bound is 0.
double elbo(const VariationalState& state, const MultitaskDataset& data,
            const Hyperparameters& h);
ElboTerms elbo_terms(const VariationalState& state,
                     const MultitaskDataset& data, const Hyperparameters& h);

/// Named blocks of the coordinate schedule, in cycle order.
enum class Block { gamma, z, rho, b, s, lambda, mu, sigma, xi, theta };

const char* to_string(Block block);

/// Applies one block update. The sigma block re-checks the bound and
/// keeps the previous value if the moment formula would lower it; the
/// theta block optimizes every task in order. Returns the bound after the
/// update.
double apply_block(VariationalState& state, const MultitaskDataset& data,
                   const Hyperparameters& h, Block block);

/// Runs the full schedule: init, then outer_iters rounds of coordinate
/// cycles (to relative tolerance inner_tol, capped) followed by task
/// weight optimization. Records the bound after every applied block in
/// elbo_trace and throws NumericalError if it ever decreases beyond
/// tolerance or turns non-finite.
VariationalState fit(const MultitaskDataset& data, const Hyperparameters& h);

/// Posterior-mean predictions for task t on new rows: fitted values for
/// regression, probabilities of label 1 for classification. Throws
/// InvalidArgument on an out-of-range task index or column mismatch.
Eigen::VectorXd predict(const VariationalState& state, const Eigen::MatrixXd& x,
                        Eigen::Index t);

/// Hard labels from classification probabilities (p > 0.5 maps to 1).
Eigen::VectorXd labels_from_probabilities(const Eigen::VectorXd& p);

}  // namespace taskmix
