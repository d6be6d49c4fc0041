#pragma once

#include <Eigen/Core>
#include <vector>

#include "taskmix/vi.hpp"

namespace taskmix {

/// Latent structure read off a fitted posterior.
struct StructureSummary {
  std::vector<int> cluster_of_task;      // argmax assignment per task
  int occupied_components = 0;           // components holding real mass
  Eigen::MatrixXd factor_usage;          // F x K mean activation per factor
  std::vector<int> effective_rank;       // factors in real use per component
  Eigen::MatrixXd task_correlation;      // T x T Pearson correlation of
                                         // weight means
  std::vector<int> degenerate_tasks;     // tasks whose weight mean is
                                         // constant, so correlation rows are
                                         // zeroed
};

/// Most likely component per task; ties resolve to the lowest index.
std::vector<int> cluster_assignments(const VariationalState& state);

/// Number of components whose total assignment mass sum_t nu_z(t, f)
/// exceeds the threshold.
int occupied_components(const VariationalState& state,
                        double threshold = 1e-3);

/// Per-component count of factors whose mean activation across tasks,
/// weighted by assignment mass, exceeds the threshold.
std::vector<int> effective_rank(const VariationalState& state,
                                double threshold = 0.5);

/// Mean activation per (component, factor), weighted by assignment mass.
Eigen::MatrixXd factor_usage(const VariationalState& state);

/// Pearson correlation between the tasks' weight means. Rows/columns of
/// tasks with constant weight means are set to zero (and 1 on the
/// diagonal); their indices are reported in `degenerate` when non-null.
Eigen::MatrixXd task_correlation(const VariationalState& state,
                                 std::vector<int>* degenerate = nullptr);

StructureSummary summarize_structure(const VariationalState& state,
                                     double occupancy_threshold = 1e-3,
                                     double usage_threshold = 0.5);

/// Adjusted Rand index between two labelings of the same items. Equals 1
/// for identical partitions and is 0 in expectation under random
/// labelings. Throws InvalidArgument on length mismatch or empty input.
double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b);

}  // namespace taskmix
