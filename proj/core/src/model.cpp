#include "taskmix/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "taskmix/errors.hpp"
#include "taskmix/rng.hpp"

namespace taskmix {

std::string to_string(TaskType type) {
  return type == TaskType::regression ? "regression" : "classification";
}

TaskType task_type_from_string(const std::string& s) {
  if (s == "regression") {
    return TaskType::regression;
  }
  if (s == "classification") {
    return TaskType::classification;
  }
  throw InvalidArgument("unknown task type: \"" + s + "\"");
}

void MultitaskDataset::validate() const {
  if (feature_dim < 1) {
    throw InvalidArgument("dataset: feature_dim must be >= 1");
  }
  std::set<std::string> seen;
  for (const auto& task : tasks) {
    if (task.id.empty()) {
      throw InvalidArgument("dataset: empty task id");
    }
    if (!seen.insert(task.id).second) {
      throw InvalidArgument("dataset: duplicate task id \"" + task.id + "\"");
    }
    if (task.x.cols() != feature_dim) {
      std::ostringstream msg;
      msg << "dataset: task \"" << task.id << "\" has " << task.x.cols()
          << " feature columns, expected " << feature_dim;
      throw InvalidArgument(msg.str());
    }
    if (task.y.size() != task.x.rows()) {
      std::ostringstream msg;
      msg << "dataset: task \"" << task.id << "\" has " << task.x.rows()
          << " feature rows but " << task.y.size() << " responses";
      throw InvalidArgument(msg.str());
    }
    if (!task.x.allFinite() || !task.y.allFinite()) {
      throw InvalidArgument("dataset: task \"" + task.id +
                            "\" contains non-finite values");
    }
    if (task_type == TaskType::classification) {
      for (Eigen::Index i = 0; i < task.y.size(); ++i) {
        if (task.y[i] != 0.0 && task.y[i] != 1.0) {
          std::ostringstream msg;
          msg << "dataset: task \"" << task.id << "\" row " << i
              << ": classification label must be 0 or 1, got " << task.y[i];
          throw InvalidArgument(msg.str());
        }
      }
    }
  }
}

void Hyperparameters::validate() const {
  if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) {
    throw InvalidArgument("hyperparameters: alpha1 must be finite and > 0");
  }
  if (!(alpha2 > 0.0) || !std::isfinite(alpha2)) {
    throw InvalidArgument("hyperparameters: alpha2 must be finite and > 0");
  }
  if (truncation_f < 1) {
    throw InvalidArgument("hyperparameters: truncation_f must be >= 1");
  }
  if (truncation_k < 0) {
    throw InvalidArgument("hyperparameters: truncation_k must be >= 0");
  }
  if (outer_iters < 1) {
    throw InvalidArgument("hyperparameters: outer_iters must be >= 1");
  }
  if (!(inner_tol > 0.0) || !std::isfinite(inner_tol)) {
    throw InvalidArgument("hyperparameters: inner_tol must be finite and > 0");
  }
}

GenerativeDraw sample_prior(const Hyperparameters& h, Eigen::Index num_tasks,
                            Eigen::Index feature_dim, std::uint64_t seed,
                            double sigma) {
  h.validate();
  if (num_tasks < 1) {
    throw InvalidArgument("sample_prior: num_tasks must be >= 1");
  }
  if (feature_dim < 1) {
    throw InvalidArgument("sample_prior: feature_dim must be >= 1");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sample_prior: sigma must be finite and > 0");
  }
  const Eigen::Index t_count = num_tasks;
  const Eigen::Index d = feature_dim;
  const Eigen::Index f_count = h.truncation_f;
  const Eigen::Index k_count = h.truncation_k;

  Rng rng(seed);
  GenerativeDraw draw;
  draw.sigma = sigma;

  // Stick proportions; the last one is pinned to 1 so z always lands in
  // the truncated support.
  draw.phi.resize(f_count);
  for (Eigen::Index f = 0; f + 1 < f_count; ++f) {
    draw.phi[f] = rng.beta_one(h.alpha1);
  }
  draw.phi[f_count - 1] = 1.0;

  draw.beta.resize(f_count, k_count);
  for (Eigen::Index f = 0; f < f_count; ++f) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      draw.beta(f, k) = rng.beta_one_rev(h.alpha2 / static_cast<double>(k_count));
    }
  }

  draw.mu.resize(f_count, d);
  for (Eigen::Index f = 0; f < f_count; ++f) {
    for (Eigen::Index j = 0; j < d; ++j) {
      draw.mu(f, j) = rng.normal();
    }
  }

  draw.lambda.assign(f_count, Eigen::MatrixXd(d, k_count));
  for (Eigen::Index f = 0; f < f_count; ++f) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      for (Eigen::Index j = 0; j < d; ++j) {
        draw.lambda[f](j, k) = rng.normal();
      }
    }
  }

  // Sequential stick-breaking draw: accept component f with probability
  // phi[f] after rejecting all earlier ones; the last component catches
  // whatever remains.
  draw.z.resize(t_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    Eigen::Index picked = f_count - 1;
    for (Eigen::Index f = 0; f + 1 < f_count; ++f) {
      if (rng.bernoulli(draw.phi[f])) {
        picked = f;
        break;
      }
    }
    draw.z[t] = static_cast<int>(picked);
  }

  draw.s.resize(t_count, k_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      draw.s(t, k) = rng.normal();
    }
  }

  draw.b.resize(t_count, k_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      draw.b(t, k) = rng.bernoulli(draw.beta(draw.z[t], k)) ? 1 : 0;
    }
  }

  const double noise_scale = 1.0 / std::sqrt(sigma);
  draw.theta.resize(t_count, d);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::Index f = draw.z[t];
    Eigen::VectorXd mean = draw.mu.row(f).transpose();
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (draw.b(t, k) == 1) {
        mean += draw.s(t, k) * draw.lambda[f].col(k);
      }
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      draw.theta(t, j) = mean[j] + noise_scale * rng.normal();
    }
  }
  return draw;
}

double loglik_regression(const Eigen::VectorXd& theta,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() != theta.size()) {
    throw InvalidArgument("loglik_regression: feature/weight dimension mismatch");
  }
  if (x.rows() != y.size()) {
    throw InvalidArgument("loglik_regression: row/response count mismatch");
  }
  constexpr double kLogTwoPi = 1.8378770664093454836;
  const Eigen::VectorXd resid = y - x * theta;
  return -0.5 * static_cast<double>(y.size()) * kLogTwoPi -
         0.5 * resid.squaredNorm();
}

}  // namespace taskmix
