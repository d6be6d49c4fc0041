#include "taskmix/eval.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "taskmix/data_io.hpp"
#include "taskmix/errors.hpp"
#include "taskmix/math.hpp"
#include "taskmix/solvers.hpp"

namespace taskmix {

double mse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("mse: length mismatch");
  }
  if (predicted.size() == 0) {
    throw InvalidArgument("mse: empty input");
  }
  return (predicted - truth).squaredNorm() /
         static_cast<double>(predicted.size());
}

double accuracy(const Eigen::VectorXd& probabilities,
                const Eigen::VectorXd& labels) {
  if (probabilities.size() != labels.size()) {
    throw InvalidArgument("accuracy: length mismatch");
  }
  if (probabilities.size() == 0) {
    throw InvalidArgument("accuracy: empty input");
  }
  double correct = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double label = probabilities[i] > 0.5 ? 1.0 : 0.0;
    correct += label == labels[i] ? 1.0 : 0.0;
  }
  return correct / static_cast<double>(labels.size());
}

Eigen::MatrixXd fit_stl(const MultitaskDataset& data) {
  data.validate();
  Eigen::MatrixXd weights(data.num_tasks(), data.feature_dim);
  for (Eigen::Index t = 0; t < data.num_tasks(); ++t) {
    weights.row(t) =
        fit_single_task(data.tasks[t].x, data.tasks[t].y, data.task_type)
            .transpose();
  }
  return weights;
}

namespace {

double task_metric(const Eigen::VectorXd& theta, const TaskData& task,
                   TaskType type) {
  if (task.x.rows() == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const Eigen::VectorXd activation = task.x * theta;
  if (type == TaskType::regression) {
    return mse(activation, task.y);
  }
  const Eigen::VectorXd probabilities =
      activation.unaryExpr([](double a) { return logistic(a); });
  return accuracy(probabilities, task.y);
}

}  // namespace

Eigen::VectorXd per_task_metric(const Eigen::MatrixXd& weights,
                                const MultitaskDataset& data) {
  if (weights.rows() != data.num_tasks() ||
      weights.cols() != data.feature_dim) {
    throw InvalidArgument("per_task_metric: weight shape mismatch");
  }
  Eigen::VectorXd result(data.num_tasks());
  for (Eigen::Index t = 0; t < data.num_tasks(); ++t) {
    result[t] =
        task_metric(weights.row(t).transpose(), data.tasks[t], data.task_type);
  }
  return result;
}

Eigen::VectorXd per_task_metric(const VariationalState& state,
                                const MultitaskDataset& data) {
  if (state.num_tasks() != data.num_tasks() ||
      state.feature_dim() != data.feature_dim) {
    throw InvalidArgument("per_task_metric: state/dataset shape mismatch");
  }
  return per_task_metric(state.nu_theta, data);
}

double mean_metric(const Eigen::VectorXd& per_task) {
  double total = 0.0;
  double count = 0.0;
  for (Eigen::Index t = 0; t < per_task.size(); ++t) {
    if (std::isfinite(per_task[t])) {
      total += per_task[t];
      count += 1.0;
    }
  }
  if (count == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return total / count;
}

FitOutput fit_with_report(const MultitaskDataset& train,
                          const Hyperparameters& h) {
  const auto start = std::chrono::steady_clock::now();
  FitOutput out;
  out.state = fit(train, h);
  const auto stop = std::chrono::steady_clock::now();

  out.report.metric_name =
      train.task_type == TaskType::regression ? "mse" : "accuracy";
  for (const auto& task : train.tasks) {
    out.report.task_ids.push_back(task.id);
  }
  out.report.train_metric = per_task_metric(out.state, train);
  out.report.mean_train_metric = mean_metric(out.report.train_metric);
  out.report.elbo_trace = out.state.elbo_trace;
  out.report.structure = summarize_structure(out.state);
  out.report.seed = h.seed;
  out.report.wall_time_seconds =
      std::chrono::duration<double>(stop - start).count();
  return out;
}

FitOutput fit_with_restarts(const MultitaskDataset& train,
                            const Hyperparameters& h, int restarts) {
  if (restarts < 1) {
    throw InvalidArgument("fit_with_restarts: restarts must be positive");
  }
  const auto start = std::chrono::steady_clock::now();
  FitOutput best;
  for (int i = 0; i < restarts; ++i) {
    Hyperparameters attempt = h;
    attempt.seed = h.seed + static_cast<std::uint64_t>(i);
    FitOutput out = fit_with_report(train, attempt);
    if (i == 0 ||
        out.report.elbo_trace.back() > best.report.elbo_trace.back()) {
      best = std::move(out);
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  best.report.wall_time_seconds =
      std::chrono::duration<double>(stop - start).count();
  return best;
}

std::vector<CurvePoint> learning_curve(
    const MultitaskDataset& train, const MultitaskDataset& test,
    const Hyperparameters& h, const std::vector<double>& fractions,
    const std::vector<std::uint64_t>& seeds) {
  if (train.num_tasks() != test.num_tasks()) {
    throw InvalidArgument("learning_curve: train/test task counts differ");
  }
  if (fractions.empty() || seeds.empty()) {
    throw InvalidArgument("learning_curve: needs fractions and seeds");
  }
  std::vector<CurvePoint> points;
  for (const double fraction : fractions) {
    for (const std::uint64_t seed : seeds) {
      const MultitaskDataset sub = split_fraction(train, fraction, seed);
      Hyperparameters h_run = h;
      h_run.seed = seed;

      const VariationalState state = fit(sub, h_run);
      points.push_back({"mfa_mtl", fraction, seed,
                        mean_metric(per_task_metric(state.nu_theta, test))});

      const Eigen::MatrixXd stl_weights = fit_stl(sub);
      points.push_back({"stl", fraction, seed,
                        mean_metric(per_task_metric(stl_weights, test))});
    }
  }
  return points;
}

}  // namespace taskmix
