#include "taskmix/structure.hpp"

#include <cmath>
#include <map>

#include "taskmix/errors.hpp"

namespace taskmix {

std::vector<int> cluster_assignments(const VariationalState& state) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  std::vector<int> result(t_count, 0);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index f = 1; f < f_count; ++f) {
      if (state.nu_z(t, f) > state.nu_z(t, best)) {
        best = f;
      }
    }
    result[t] = static_cast<int>(best);
  }
  return result;
}

int occupied_components(const VariationalState& state, double threshold) {
  const Eigen::VectorXd mass = state.nu_z.colwise().sum().transpose();
  return static_cast<int>((mass.array() > threshold).count());
}

Eigen::MatrixXd factor_usage(const VariationalState& state) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  const Eigen::Index k_count = state.num_factors();
  Eigen::MatrixXd usage = Eigen::MatrixXd::Zero(f_count, k_count);
  if (k_count == 0) {
    return usage;
  }
  for (Eigen::Index f = 0; f < f_count; ++f) {
    double mass = 0.0;
    Eigen::RowVectorXd weighted = Eigen::RowVectorXd::Zero(k_count);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      mass += state.nu_z(t, f);
      weighted += state.nu_z(t, f) * state.nu_b[t].row(f);
    }
    if (mass > 0.0) {
      usage.row(f) = weighted / mass;
    }
  }
  return usage;
}

std::vector<int> effective_rank(const VariationalState& state,
                                double threshold) {
  const Eigen::MatrixXd usage = factor_usage(state);
  std::vector<int> result(usage.rows(), 0);
  for (Eigen::Index f = 0; f < usage.rows(); ++f) {
    result[f] = static_cast<int>((usage.row(f).array() > threshold).count());
  }
  return result;
}

Eigen::MatrixXd task_correlation(const VariationalState& state,
                                 std::vector<int>* degenerate) {
  const Eigen::Index t_count = state.num_tasks();
  Eigen::MatrixXd centered = state.nu_theta;
  centered.colwise() -= state.nu_theta.rowwise().mean();

  std::vector<bool> constant(t_count, false);
  Eigen::VectorXd norms(t_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    norms[t] = centered.row(t).norm();
    constant[t] = !(norms[t] > 0.0);
    if (constant[t] && degenerate != nullptr) {
      degenerate->push_back(static_cast<int>(t));
    }
  }

  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(t_count, t_count);
  for (Eigen::Index i = 0; i < t_count; ++i) {
    for (Eigen::Index j = i + 1; j < t_count; ++j) {
      if (constant[i] || constant[j]) {
        continue;  // undefined; leave as 0
      }
      const double value =
          centered.row(i).dot(centered.row(j)) / (norms[i] * norms[j]);
      corr(i, j) = std::clamp(value, -1.0, 1.0);
      corr(j, i) = corr(i, j);
    }
  }
  return corr;
}

StructureSummary summarize_structure(const VariationalState& state,
                                     double occupancy_threshold,
                                     double usage_threshold) {
  StructureSummary summary;
  summary.cluster_of_task = cluster_assignments(state);
  summary.occupied_components = occupied_components(state, occupancy_threshold);
  summary.factor_usage = factor_usage(state);
  summary.effective_rank = effective_rank(state, usage_threshold);
  summary.task_correlation = task_correlation(state, &summary.degenerate_tasks);
  return summary;
}

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("adjusted_rand_index: label vectors differ in length");
  }
  if (a.empty()) {
    throw InvalidArgument("adjusted_rand_index: empty labelings");
  }
  std::map<int, double> count_a;
  std::map<int, double> count_b;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    count_a[a[i]] += 1.0;
    count_b[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  const auto pairs = [](double n) { return 0.5 * n * (n - 1.0); };
  double sum_joint = 0.0;
  for (const auto& [key, n] : joint) {
    sum_joint += pairs(n);
  }
  double sum_a = 0.0;
  for (const auto& [key, n] : count_a) {
    sum_a += pairs(n);
  }
  double sum_b = 0.0;
  for (const auto& [key, n] : count_b) {
    sum_b += pairs(n);
  }
  const double total_pairs = pairs(static_cast<double>(a.size()));
  const double expected = total_pairs > 0.0 ? sum_a * sum_b / total_pairs : 0.0;
  const double maximum = 0.5 * (sum_a + sum_b);
  const double denom = maximum - expected;
  if (denom == 0.0) {
    // Both partitions are trivial in the same way (all singletons or one
    // block); they agree perfectly.
    return 1.0;
  }
  return (sum_joint - expected) / denom;
}

}  // namespace taskmix
