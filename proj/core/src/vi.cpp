#include "taskmix/vi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "taskmix/errors.hpp"
#include "taskmix/math.hpp"
#include "taskmix/optimize.hpp"
#include "taskmix/rng.hpp"
#include "taskmix/solvers.hpp"
#include "vi_internal.hpp"

namespace taskmix {

namespace detail {

Eigen::VectorXd factor_mean(const VariationalState& state, Eigen::Index t,
                            Eigen::Index f) {
  const Eigen::Index k_count = state.num_factors();
  if (k_count == 0) {
    return Eigen::VectorXd::Zero(state.feature_dim());
  }
  const Eigen::VectorXd weights = (state.nu_s[t].row(f).array() *
                                   state.nu_b[t].row(f).array())
                                      .matrix()
                                      .transpose();
  return state.nu_lambda[f] * weights;
}

double factor_second_moment(const VariationalState& state, Eigen::Index t,
                            Eigen::Index f) {
  const Eigen::Index k_count = state.num_factors();
  const double d = static_cast<double>(state.feature_dim());
  double total = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double col_sq = state.nu_lambda[f].col(k).squaredNorm();
    const double s = state.nu_s[t](f, k);
    const double b = state.nu_b[t](f, k);
    total += (col_sq + d) * b * (s * s + 1.0) - col_sq * b * b * s * s;
  }
  return total;
}

double expected_residual_sq(const VariationalState& state, Eigen::Index t,
                            Eigen::Index f) {
  const Eigen::VectorXd mean_resid = state.nu_theta.row(t).transpose() -
                                     state.nu_mu.row(f).transpose() -
                                     factor_mean(state, t, f);
  return mean_resid.squaredNorm() +
         2.0 * static_cast<double>(state.feature_dim()) +
         factor_second_moment(state, t, f);
}

double expected_log_ptheta(const VariationalState& state, Eigen::Index t,
                           Eigen::Index f) {
  const double d = static_cast<double>(state.feature_dim());
  return 0.5 * d * (std::log(state.sigma) - kLogTwoPi) -
         0.5 * state.sigma * expected_residual_sq(state, t, f);
}

Eigen::VectorXd expected_log_sticks(const VariationalState& state) {
  const Eigen::Index f_count = state.num_components();
  Eigen::VectorXd result(f_count);
  double prefix = 0.0;  // sum of E log(1 - phi_j) over sticks before f
  for (Eigen::Index f = 0; f < f_count; ++f) {
    if (f + 1 < f_count) {
      const double a = state.gamma(f, 0);
      const double b = state.gamma(f, 1);
      const double psi_sum = digamma(a + b);
      result[f] = prefix + digamma(a) - psi_sum;
      prefix += digamma(b) - psi_sum;
    } else {
      result[f] = prefix;  // last stick proportion is exactly 1
    }
  }
  return result;
}

double theta_objective(const VariationalState& state,
                       const MultitaskDataset& data, Eigen::Index t,
                       const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  const Eigen::Index f_count = state.num_components();
  const Eigen::MatrixXd& x = data.tasks[t].x;
  const Eigen::VectorXd& y = data.tasks[t].y;

  double value = 0.0;
  if (grad != nullptr) {
    grad->setZero(theta.size());
  }

  for (Eigen::Index f = 0; f < f_count; ++f) {
    const double weight = state.nu_z(t, f);
    const Eigen::VectorXd target =
        state.nu_mu.row(f).transpose() + factor_mean(state, t, f);
    const Eigen::VectorXd diff = theta - target;
    value -= 0.5 * state.sigma * weight * diff.squaredNorm();
    if (grad != nullptr) {
      grad->noalias() -= state.sigma * weight * diff;
    }
  }

  const Eigen::VectorXd activation = x * theta;
  if (state.task_type == TaskType::regression) {
    const Eigen::VectorXd resid = y - activation;
    value -= 0.5 * resid.squaredNorm();
    if (grad != nullptr) {
      grad->noalias() += x.transpose() * resid;
    }
  } else {
    Eigen::VectorXd like_coeff(activation.size());
    for (Eigen::Index i = 0; i < activation.size(); ++i) {
      const double lam = jj_lambda(state.xi[t][i]);
      value += (y[i] - 0.5) * activation[i] - lam * activation[i] * activation[i];
      like_coeff[i] = (y[i] - 0.5) - 2.0 * lam * activation[i];
    }
    if (grad != nullptr) {
      grad->noalias() += x.transpose() * like_coeff;
    }
  }
  return value;
}

}  // namespace detail

using detail::factor_mean;

void VariationalState::validate() const {
  const Eigen::Index t_count = num_tasks();
  const Eigen::Index d = feature_dim();
  const Eigen::Index f_count = num_components();
  const Eigen::Index k_count = num_factors();

  auto shape_error = [](const std::string& what) {
    throw InvalidArgument("variational state: " + what);
  };
  if (f_count < 1) {
    shape_error("needs at least one component");
  }
  if (nu_mu.cols() != d) {
    shape_error("nu_mu column count does not match feature dim");
  }
  if (static_cast<Eigen::Index>(nu_lambda.size()) != f_count) {
    shape_error("nu_lambda must have one matrix per component");
  }
  for (const auto& lam : nu_lambda) {
    if (lam.rows() != d || lam.cols() != k_count) {
      shape_error("nu_lambda matrix has wrong shape");
    }
  }
  if (static_cast<Eigen::Index>(nu_s.size()) != t_count ||
      static_cast<Eigen::Index>(nu_b.size()) != t_count) {
    shape_error("nu_s and nu_b must have one matrix per task");
  }
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (nu_s[t].rows() != f_count || nu_s[t].cols() != k_count) {
      shape_error("nu_s matrix has wrong shape");
    }
    if (nu_b[t].rows() != f_count || nu_b[t].cols() != k_count) {
      shape_error("nu_b matrix has wrong shape");
    }
  }
  if (nu_z.rows() != t_count || nu_z.cols() != f_count) {
    shape_error("nu_z has wrong shape");
  }
  if (gamma.rows() != f_count || gamma.cols() != 2) {
    shape_error("gamma has wrong shape");
  }
  if (rho1.rows() != f_count || rho2.rows() != f_count) {
    shape_error("rho has wrong shape");
  }

  auto numeric_error = [](const std::string& what) {
    throw NumericalError("variational state: " + what);
  };
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    numeric_error("sigma must be finite and > 0");
  }
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if ((nu_b[t].array() < 0.0).any() || (nu_b[t].array() > 1.0).any()) {
      numeric_error("activation probabilities left [0, 1]");
    }
    const double row_sum = nu_z.row(t).sum();
    if ((nu_z.row(t).array() < 0.0).any() ||
        std::abs(row_sum - 1.0) > 1e-8) {
      numeric_error("assignment row does not form a distribution");
    }
  }
  if ((gamma.array() <= 0.0).any() || (rho1.array() <= 0.0).any() ||
      (rho2.array() <= 0.0).any()) {
    numeric_error("Beta parameters must stay positive");
  }
  if (task_type == TaskType::classification &&
      static_cast<Eigen::Index>(xi.size()) != t_count) {
    shape_error("classification state needs one tightness vector per task");
  }
  for (const auto& v : xi) {
    if ((v.array() < 0.0).any()) {
      numeric_error("tightness parameters must be non-negative");
    }
  }
}

VariationalState init_state(const MultitaskDataset& data,
                            const Hyperparameters& h) {
  data.validate();
  h.validate();
  const Eigen::Index t_count = data.num_tasks();
  if (t_count == 0) {
    throw InvalidArgument("init_state: empty dataset");
  }
  const Eigen::Index d = data.feature_dim;
  const Eigen::Index f_count = h.truncation_f;
  const Eigen::Index k_count = h.truncation_k;

  VariationalState state;
  state.task_type = data.task_type;

  state.nu_theta.resize(t_count, d);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    state.nu_theta.row(t) =
        fit_single_task(data.tasks[t].x, data.tasks[t].y, data.task_type)
            .transpose();
  }

  state.nu_z = Eigen::MatrixXd::Constant(t_count, f_count,
                                         1.0 / static_cast<double>(f_count));
  state.nu_s.assign(t_count, Eigen::MatrixXd::Zero(f_count, k_count));
  state.nu_b.assign(t_count,
                    Eigen::MatrixXd::Constant(f_count, k_count, 0.5));

  // Seeded draws, in a fixed order: the task permutation that anchors the
  // component means, then the mean perturbations row by row, then the
  // loadings. Anchoring each component at a distinct task's weights breaks
  // the symmetry that a shared-mean start cannot escape.
  Rng rng(h.seed);
  std::vector<Eigen::Index> perm(t_count);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = t_count - 1; i > 0; --i) {
    const Eigen::Index j = static_cast<Eigen::Index>(
        rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  state.nu_mu.resize(f_count, d);
  for (Eigen::Index f = 0; f < f_count; ++f) {
    const Eigen::Index source = perm[f % t_count];
    for (Eigen::Index j = 0; j < d; ++j) {
      state.nu_mu(f, j) = state.nu_theta(source, j) + 0.01 * rng.normal();
    }
  }

  state.nu_lambda.assign(f_count, Eigen::MatrixXd(d, k_count));
  for (Eigen::Index f = 0; f < f_count; ++f) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      for (Eigen::Index j = 0; j < d; ++j) {
        state.nu_lambda[f](j, k) = 0.01 * rng.normal();
      }
    }
  }

  state.gamma.resize(f_count, 2);
  state.gamma.col(0).setOnes();
  state.gamma.col(1).setConstant(h.alpha1);

  const double activation_prior =
      k_count > 0 ? h.alpha2 / static_cast<double>(k_count) : 1.0;
  state.rho1 = Eigen::MatrixXd::Constant(f_count, k_count, activation_prior);
  state.rho2 = Eigen::MatrixXd::Constant(f_count, k_count, 1.0);

  state.sigma = 1.0;

  if (data.task_type == TaskType::classification) {
    state.xi.resize(t_count);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      state.xi[t] =
          (data.tasks[t].x * state.nu_theta.row(t).transpose()).cwiseAbs();
    }
  }
  return state;
}

void update_gamma(VariationalState& state, const Hyperparameters& h) {
  const Eigen::Index f_count = state.num_components();
  const Eigen::VectorXd mass = state.nu_z.colwise().sum().transpose();
  double above = 0.0;  // total mass assigned to components after f
  for (Eigen::Index f = f_count - 1; f >= 0; --f) {
    state.gamma(f, 0) = 1.0 + mass[f];
    state.gamma(f, 1) = h.alpha1 + above;
    above += mass[f];
  }
}

void update_z(VariationalState& state) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  if (f_count == 1) {
    state.nu_z.setOnes();
    return;
  }
  const Eigen::VectorXd log_sticks = detail::expected_log_sticks(state);
  Eigen::VectorXd scores(f_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index f = 0; f < f_count; ++f) {
      scores[f] = log_sticks[f] + detail::expected_log_ptheta(state, t, f);
    }
    const double norm = log_sum_exp({scores.data(),
                                     static_cast<std::size_t>(f_count)});
    for (Eigen::Index f = 0; f < f_count; ++f) {
      state.nu_z(t, f) = std::exp(scores[f] - norm);
    }
    state.nu_z.row(t) /= state.nu_z.row(t).sum();
  }
}

void update_rho(VariationalState& state, const Hyperparameters& h) {
  const Eigen::Index k_count = state.num_factors();
  if (k_count == 0) {
    return;
  }
  const double prior = h.alpha2 / static_cast<double>(k_count);
  const Eigen::Index t_count = state.num_tasks();
  Eigen::MatrixXd on_mass = Eigen::MatrixXd::Zero(state.num_components(),
                                                  k_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    on_mass += state.nu_b[t];
  }
  state.rho1 = on_mass.array() + prior;
  state.rho2 = (static_cast<double>(t_count) - on_mass.array()) + 1.0;
}

namespace {

// Shared sweep for the activation and score blocks. For one (task,
// component) pair, factor k's update needs the mean residual with factor
// k excluded; the residual is maintained incrementally across the sweep.
template <typename PerFactor>
void sweep_factors(VariationalState& state, PerFactor&& update_one) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  const Eigen::Index k_count = state.num_factors();
  if (k_count == 0) {
    return;
  }
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index f = 0; f < f_count; ++f) {
      Eigen::VectorXd resid = state.nu_theta.row(t).transpose() -
                              state.nu_mu.row(f).transpose() -
                              factor_mean(state, t, f);
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const Eigen::VectorXd& col_ref = state.nu_lambda[f].col(k);
        const double old_weight =
            state.nu_b[t](f, k) * state.nu_s[t](f, k);
        const Eigen::VectorXd resid_rest = resid + old_weight * col_ref;
        update_one(t, f, k, resid_rest);
        const double new_weight =
            state.nu_b[t](f, k) * state.nu_s[t](f, k);
        resid = resid_rest - new_weight * col_ref;
      }
    }
  }
}

}  // namespace

void update_b(VariationalState& state) {
  sweep_factors(state, [&state](Eigen::Index t, Eigen::Index f,
                                Eigen::Index k,
                                const Eigen::VectorXd& resid_rest) {
    const double col_sq = state.nu_lambda[f].col(k).squaredNorm();
    const double d = static_cast<double>(state.feature_dim());
    const double s = state.nu_s[t](f, k);
    const double prior_logit =
        digamma(state.rho1(f, k)) - digamma(state.rho2(f, k));
    const double coupling =
        s * state.nu_lambda[f].col(k).dot(resid_rest) -
        0.5 * (col_sq + d) * (s * s + 1.0);
    state.nu_b[t](f, k) =
        logistic(prior_logit + state.sigma * state.nu_z(t, f) * coupling);
  });
}

void update_s(VariationalState& state) {
  sweep_factors(state, [&state](Eigen::Index t, Eigen::Index f,
                                Eigen::Index k,
                                const Eigen::VectorXd& resid_rest) {
    const double col_sq = state.nu_lambda[f].col(k).squaredNorm();
    const double d = static_cast<double>(state.feature_dim());
    const double b = state.nu_b[t](f, k);
    const double zb = state.sigma * state.nu_z(t, f) * b;
    state.nu_s[t](f, k) = zb * state.nu_lambda[f].col(k).dot(resid_rest) /
                          (1.0 + zb * (d + col_sq));
  });
}

void update_lambda(VariationalState& state) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  const Eigen::Index k_count = state.num_factors();
  const Eigen::Index d = state.feature_dim();
  if (k_count == 0) {
    return;
  }
  for (Eigen::Index f = 0; f < f_count; ++f) {
    // Rows of resid hold theta_t minus the full component-implied mean;
    // column swaps are applied incrementally as each loading updates.
    Eigen::MatrixXd resid(t_count, d);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      resid.row(t) = state.nu_theta.row(t) - state.nu_mu.row(f) -
                     factor_mean(state, t, f).transpose();
    }
    for (Eigen::Index k = 0; k < k_count; ++k) {
      double denom = 1.0;
      Eigen::VectorXd numer = Eigen::VectorXd::Zero(d);
      const Eigen::VectorXd old_col = state.nu_lambda[f].col(k);
      for (Eigen::Index t = 0; t < t_count; ++t) {
        const double z = state.nu_z(t, f);
        const double b = state.nu_b[t](f, k);
        const double s = state.nu_s[t](f, k);
        denom += state.sigma * z * b * (s * s + 1.0);
        if (z != 0.0 && b * s != 0.0) {
          numer.noalias() +=
              state.sigma * z * b * s *
              (resid.row(t).transpose() + (b * s) * old_col);
        }
      }
      const Eigen::VectorXd new_col = numer / denom;
      state.nu_lambda[f].col(k) = new_col;
      for (Eigen::Index t = 0; t < t_count; ++t) {
        const double weight = state.nu_b[t](f, k) * state.nu_s[t](f, k);
        if (weight != 0.0) {
          resid.row(t) += weight * (old_col - new_col).transpose();
        }
      }
    }
  }
}

void update_mu(VariationalState& state) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  for (Eigen::Index f = 0; f < f_count; ++f) {
    double denom = 1.0;
    Eigen::VectorXd numer = Eigen::VectorXd::Zero(state.feature_dim());
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const double z = state.nu_z(t, f);
      denom += state.sigma * z;
      if (z != 0.0) {
        numer.noalias() += state.sigma * z *
                           (state.nu_theta.row(t).transpose() -
                            factor_mean(state, t, f));
      }
    }
    state.nu_mu.row(f) = (numer / denom).transpose();
  }
}

void update_sigma(VariationalState& state) {
  const Eigen::Index t_count = state.num_tasks();
  const Eigen::Index f_count = state.num_components();
  const Eigen::Index k_count = state.num_factors();
  const double d = static_cast<double>(state.feature_dim());
  double inverse = 0.0;
  if (k_count == 0) {
    for (Eigen::Index t = 0; t < t_count; ++t) {
      for (Eigen::Index f = 0; f < f_count; ++f) {
        inverse += state.nu_z(t, f) *
                   (state.nu_theta.row(t) - state.nu_mu.row(f)).squaredNorm();
      }
    }
    inverse /= static_cast<double>(t_count) * d;
  } else {
    const double kf = static_cast<double>(k_count * f_count);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      for (Eigen::Index f = 0; f < f_count; ++f) {
        const double z = state.nu_z(t, f);
        if (z == 0.0) {
          continue;
        }
        const Eigen::VectorXd mean_resid =
            state.nu_theta.row(t).transpose() -
            state.nu_mu.row(f).transpose() - factor_mean(state, t, f);
        double factor_term = 0.0;
        for (Eigen::Index k = 0; k < k_count; ++k) {
          const double s = state.nu_s[t](f, k);
          factor_term += state.nu_b[t](f, k) *
                         (s * s + state.nu_lambda[f].col(k).squaredNorm());
        }
        inverse += z * (mean_resid.squaredNorm() / (kf * d) +
                        factor_term / kf +
                        1.0 / static_cast<double>(k_count));
      }
    }
  }
  inverse = std::clamp(inverse, 1e-12, 1e12);
  state.sigma = 1.0 / inverse;
}

void update_xi(VariationalState& state, const MultitaskDataset& data) {
  if (state.task_type != TaskType::classification) {
    return;
  }
  const Eigen::Index t_count = state.num_tasks();
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::VectorXd activation =
        data.tasks[t].x * state.nu_theta.row(t).transpose();
    for (Eigen::Index i = 0; i < activation.size(); ++i) {
      state.xi[t][i] =
          std::sqrt(activation[i] * activation[i] +
                    data.tasks[t].x.row(i).squaredNorm());
    }
  }
}

Eigen::VectorXd theta_gradient(const VariationalState& state,
                               const MultitaskDataset& data, Eigen::Index t) {
  if (t < 0 || t >= state.num_tasks()) {
    throw InvalidArgument("theta_gradient: task index out of range");
  }
  Eigen::VectorXd grad;
  detail::theta_objective(state, data, t, state.nu_theta.row(t).transpose(),
                          &grad);
  return grad;
}

OptimizeThetaResult optimize_theta(VariationalState& state,
                                   const MultitaskDataset& data,
                                   Eigen::Index t, double grad_tol) {
  if (t < 0 || t >= state.num_tasks()) {
    throw InvalidArgument("optimize_theta: task index out of range");
  }
  const auto objective = [&state, &data, t](const Eigen::VectorXd& theta,
                                            Eigen::VectorXd& grad) {
    return detail::theta_objective(state, data, t, theta, &grad);
  };
  LbfgsOptions options;
  options.grad_tol = grad_tol;
  options.max_iters = 200;
  const LbfgsResult result =
      lbfgs_maximize(objective, state.nu_theta.row(t).transpose(), options);
  state.nu_theta.row(t) = result.x.transpose();
  return {result.iters, result.converged};
}

const char* to_string(Block block) {
  switch (block) {
    case Block::gamma:
      return "gamma";
    case Block::z:
      return "z";
    case Block::rho:
      return "rho";
    case Block::b:
      return "b";
    case Block::s:
      return "s";
    case Block::lambda:
      return "lambda";
    case Block::mu:
      return "mu";
    case Block::sigma:
      return "sigma";
    case Block::xi:
      return "xi";
    case Block::theta:
      return "theta";
  }
  return "unknown";
}

double apply_block(VariationalState& state, const MultitaskDataset& data,
                   const Hyperparameters& h, Block block) {
  switch (block) {
    case Block::gamma:
      update_gamma(state, h);
      break;
    case Block::z:
      update_z(state);
      break;
    case Block::rho:
      update_rho(state, h);
      break;
    case Block::b:
      update_b(state);
      break;
    case Block::s:
      update_s(state);
      break;
    case Block::lambda:
      update_lambda(state);
      break;
    case Block::mu:
      update_mu(state);
      break;
    case Block::sigma: {
      // The moment formula for sigma is not the bound's maximizer, so it
      // can lower the bound; keep the previous value when it does.
      const double before = elbo(state, data, h);
      const double previous = state.sigma;
      update_sigma(state);
      const double after = elbo(state, data, h);
      if (!(after >= before)) {
        state.sigma = previous;
        return before;
      }
      return after;
    }
    case Block::xi:
      update_xi(state, data);
      break;
    case Block::theta:
      for (Eigen::Index t = 0; t < state.num_tasks(); ++t) {
        optimize_theta(state, data, t, h.inner_tol);
      }
      break;
  }
  return elbo(state, data, h);
}

VariationalState fit(const MultitaskDataset& data, const Hyperparameters& h) {
  data.validate();
  h.validate();
  if (data.num_tasks() == 0) {
    throw InvalidArgument("fit: empty dataset");
  }
  VariationalState state = init_state(data, h);

  constexpr double kMonotoneTol = 1e-8;
  constexpr int kMaxInnerCycles = 200;

  double current = elbo(state, data, h);
  if (!std::isfinite(current)) {
    throw NumericalError("fit: bound non-finite at initialization");
  }
  state.elbo_trace.push_back(current);

  const auto record = [&](double value, Block block) {
    if (!std::isfinite(value)) {
      const ElboTerms terms = elbo_terms(state, data, h);
      std::ostringstream msg;
      msg << "fit: bound non-finite after block " << to_string(block);
      if (const char* term = terms.first_non_finite(); term[0] != '\0') {
        msg << " (term " << term << ")";
      }
      throw NumericalError(msg.str());
    }
    if (value < current - kMonotoneTol * std::max(1.0, std::abs(current))) {
      std::ostringstream msg;
      msg << "fit: bound decreased from " << current << " to " << value
          << " in block " << to_string(block);
      throw NumericalError(msg.str());
    }
    current = value;
    state.elbo_trace.push_back(value);
  };

  std::vector<Block> cycle = {Block::gamma, Block::z};
  if (state.num_factors() > 0) {
    cycle.insert(cycle.end(), {Block::rho, Block::b, Block::s, Block::lambda});
  }
  cycle.push_back(Block::mu);
  cycle.push_back(Block::sigma);
  if (state.task_type == TaskType::classification) {
    cycle.push_back(Block::xi);
  }

  for (int outer = 0; outer < h.outer_iters; ++outer) {
    double cycle_start = current;
    for (int inner = 0; inner < kMaxInnerCycles; ++inner) {
      for (Block block : cycle) {
        record(apply_block(state, data, h, block), block);
      }
      if (std::abs(current - cycle_start) <=
          h.inner_tol * std::max(1.0, std::abs(cycle_start))) {
        break;
      }
      cycle_start = current;
    }
    record(apply_block(state, data, h, Block::theta), Block::theta);
  }
  return state;
}

Eigen::VectorXd predict(const VariationalState& state, const Eigen::MatrixXd& x,
                        Eigen::Index t) {
  if (t < 0 || t >= state.num_tasks()) {
    throw InvalidArgument("predict: task index out of range");
  }
  if (x.cols() != state.feature_dim()) {
    throw InvalidArgument("predict: feature dimension mismatch");
  }
  Eigen::VectorXd activation = x * state.nu_theta.row(t).transpose();
  if (state.task_type == TaskType::regression) {
    return activation;
  }
  return activation.unaryExpr([](double a) { return logistic(a); });
}

Eigen::VectorXd labels_from_probabilities(const Eigen::VectorXd& p) {
  return p.unaryExpr([](double v) { return v > 0.5 ? 1.0 : 0.0; });
}

}  // namespace taskmix
