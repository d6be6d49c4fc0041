#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace taskmix {

enum class TaskType { regression, classification };

std::string to_string(TaskType type);
TaskType task_type_from_string(const std::string& s);

/// Observations for one task: N_t rows of features with one response each.
struct TaskData {
  std::string id;
  Eigen::MatrixXd x;  // N_t x D
  Eigen::VectorXd y;  // N_t
};

/// A collection of tasks sharing a feature space and a response type.
struct MultitaskDataset {
  TaskType task_type = TaskType::regression;
  Eigen::Index feature_dim = 0;
  std::vector<TaskData> tasks;

  Eigen::Index num_tasks() const {
    return static_cast<Eigen::Index>(tasks.size());
  }

  /// Throws InvalidArgument on dimension mismatches, duplicate or empty
  /// task ids, non-finite values, or non-binary classification labels.
  void validate() const;
};

/// Fixed parameters of the model and of the fitting schedule.
struct Hyperparameters {
  double alpha1 = 1.0;    // concentration of the component-weight process
  double alpha2 = 5.0;    // concentration of the factor-activation prior
  int truncation_f = 1;   // number of mixture components (F)
  int truncation_k = 0;   // number of factors per component (K)
  int outer_iters = 3;    // alternations between coordinate cycles and
                          // task-weight optimization
  double inner_tol = 1e-5;  // relative objective tolerance of the inner loop
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless alpha1 > 0, alpha2 > 0,
  /// truncation_f >= 1, truncation_k >= 0, outer_iters >= 1, inner_tol > 0.
  void validate() const;
};

}  // namespace taskmix
