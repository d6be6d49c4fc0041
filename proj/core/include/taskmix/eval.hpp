#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "taskmix/structure.hpp"
#include "taskmix/types.hpp"
#include "taskmix/vi.hpp"

namespace taskmix {

/// Mean squared error. Throws InvalidArgument on length mismatch or empty
/// input.
double mse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

/// Fraction of correct labels after thresholding probabilities at 0.5.
/// Throws InvalidArgument on length mismatch or empty input.
double accuracy(const Eigen::VectorXd& probabilities,
                const Eigen::VectorXd& labels);

/// Independent single-task baseline: one penalized maximum-likelihood
/// weight vector per task (the same solver that initializes the engine).
Eigen::MatrixXd fit_stl(const MultitaskDataset& data);

/// Per-task metric of fixed weight vectors on a dataset: MSE for
/// regression, accuracy for classification. Tasks without rows get NaN.
Eigen::VectorXd per_task_metric(const Eigen::MatrixXd& weights,
                                const MultitaskDataset& data);

/// Same metric evaluated with a fitted posterior's weight means.
Eigen::VectorXd per_task_metric(const VariationalState& state,
                                const MultitaskDataset& data);

/// Mean over the finite entries; NaN when none are.
double mean_metric(const Eigen::VectorXd& per_task);

/// What fitting produced, beyond the posterior itself: training metrics,
/// the bound trace, and the latent structure.
struct FitReport {
  std::string metric_name;  // "mse" or "accuracy"
  std::vector<std::string> task_ids;
  Eigen::VectorXd train_metric;  // per task, on the fitting data
  double mean_train_metric = 0.0;
  std::vector<double> elbo_trace;
  StructureSummary structure;
  std::uint64_t seed = 0;  // the seed that produced this fit
  double wall_time_seconds = 0.0;
};

struct FitOutput {
  VariationalState state;
  FitReport report;
};

/// Runs the engine and assembles the report.
FitOutput fit_with_report(const MultitaskDataset& train,
                          const Hyperparameters& h);

/// Runs the engine `restarts` times with seeds h.seed, h.seed+1, ... and
/// keeps the run whose final bound is highest (ties: lowest seed). The
/// report's `seed` names the winning run, so the result can be reproduced
/// with a single fit.
FitOutput fit_with_restarts(const MultitaskDataset& train,
                            const Hyperparameters& h, int restarts);

/// One learning-curve measurement.
struct CurvePoint {
  std::string method;  // "mfa_mtl" or "stl"
  double fraction = 1.0;
  std::uint64_t seed = 0;
  double value = 0.0;  // mean test metric
};

/// Test metric of both methods across training fractions and replicate
/// seeds. Each replicate subsamples the training set with `seed`, which
/// also seeds the fit. Rows come out ordered by (fraction, seed, method).
std::vector<CurvePoint> learning_curve(const MultitaskDataset& train,
                                       const MultitaskDataset& test,
                                       const Hyperparameters& h,
                                       const std::vector<double>& fractions,
                                       const std::vector<std::uint64_t>& seeds);

}  // namespace taskmix
