#include <cmath>

#include "taskmix/errors.hpp"
#include "taskmix/math.hpp"
#include "taskmix/vi.hpp"
#include "vi_internal.hpp"

namespace taskmix {

double ElboTerms::total() const {
  return likelihood + theta_prior + mu_prior + lambda_prior + s_prior +
         b_prior + beta_prior + z_prior + phi_prior + entropy_z + entropy_b +
         entropy_beta + entropy_phi + entropy_gaussian;
}

const char* ElboTerms::first_non_finite() const {
  const struct {
    const char* name;
    double value;
  } entries[] = {
      {"likelihood", likelihood},
      {"theta_prior", theta_prior},
      {"mu_prior", mu_prior},
      {"lambda_prior", lambda_prior},
      {"s_prior", s_prior},
      {"b_prior", b_prior},
      {"beta_prior", beta_prior},
      {"z_prior", z_prior},
      {"phi_prior", phi_prior},
      {"entropy_z", entropy_z},
      {"entropy_b", entropy_b},
      {"entropy_beta", entropy_beta},
      {"entropy_phi", entropy_phi},
      {"entropy_gaussian", entropy_gaussian},
  };
  for (const auto& entry : entries) {
    if (!std::isfinite(entry.value)) {
      return entry.name;
    }
  }
  return "";
}

ElboTerms elbo_terms(const VariationalState& state,
                     const MultitaskDataset& data, const Hyperparameters& h) {
  using detail::kLogTwoPi;
  if (data.num_tasks() != state.num_tasks()) {
    throw InvalidArgument("elbo: dataset and state disagree on task count");
  }
  ElboTerms terms;
  const Eigen::Index t_count = state.num_tasks();
  if (t_count == 0) {
    return terms;
  }
  if (data.feature_dim != state.feature_dim()) {
    throw InvalidArgument("elbo: dataset and state disagree on feature dim");
  }
  const Eigen::Index d = state.feature_dim();
  const Eigen::Index f_count = state.num_components();
  const Eigen::Index k_count = state.num_factors();
  const double dd = static_cast<double>(d);

  // Likelihood of the observations given the task weights; for
  // classification this is the quadratic lower bound at the current
  // tightness parameters.
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::MatrixXd& x = data.tasks[t].x;
    const Eigen::VectorXd& y = data.tasks[t].y;
    const Eigen::VectorXd activation = x * state.nu_theta.row(t).transpose();
    if (state.task_type == TaskType::regression) {
      terms.likelihood +=
          -0.5 * static_cast<double>(y.size()) * kLogTwoPi -
          0.5 * ((y - activation).squaredNorm() + x.squaredNorm());
    } else {
      if (static_cast<Eigen::Index>(state.xi.size()) != t_count ||
          state.xi[t].size() != y.size()) {
        throw InvalidArgument(
            "elbo: classification state lacks a tightness parameter per "
            "observation");
      }
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double xi = state.xi[t][i];
        const double second_moment =
            activation[i] * activation[i] + x.row(i).squaredNorm();
        terms.likelihood += (y[i] - 0.5) * activation[i] - 0.5 * xi +
                            log_logistic(xi) -
                            jj_lambda(xi) * (second_moment - xi * xi);
      }
    }
  }

  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index f = 0; f < f_count; ++f) {
      const double z = state.nu_z(t, f);
      if (z != 0.0) {
        terms.theta_prior += z * detail::expected_log_ptheta(state, t, f);
      }
    }
  }

  for (Eigen::Index f = 0; f < f_count; ++f) {
    terms.mu_prior +=
        -0.5 * (dd * kLogTwoPi + state.nu_mu.row(f).squaredNorm() + dd);
    terms.lambda_prior += -0.5 * (static_cast<double>(k_count) *
                                      (dd * kLogTwoPi + dd) +
                                  state.nu_lambda[f].squaredNorm());
  }

  const double kk = static_cast<double>(k_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    terms.s_prior += -0.5 * (static_cast<double>(f_count) * kk *
                                 (kLogTwoPi + 1.0) +
                             state.nu_s[t].squaredNorm());
    for (Eigen::Index f = 0; f < f_count; ++f) {
      for (Eigen::Index k = 0; k < k_count; ++k) {
        terms.entropy_b += binary_entropy(state.nu_b[t](f, k));
      }
    }
    for (Eigen::Index f = 0; f < f_count; ++f) {
      terms.entropy_z -= xlogx(state.nu_z(t, f));
    }
  }

  if (k_count > 0) {
    const double prior = h.alpha2 / kk;
    for (Eigen::Index f = 0; f < f_count; ++f) {
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const double a = state.rho1(f, k);
        const double b = state.rho2(f, k);
        const double psi_sum = digamma(a + b);
        const double e_log_beta = digamma(a) - psi_sum;
        const double e_log_comp = digamma(b) - psi_sum;
        double on_mass = 0.0;
        for (Eigen::Index t = 0; t < t_count; ++t) {
          on_mass += state.nu_b[t](f, k);
        }
        terms.b_prior += on_mass * e_log_beta +
                         (static_cast<double>(t_count) - on_mass) * e_log_comp;
        terms.beta_prior += (prior - 1.0) * e_log_beta - lbeta(prior, 1.0);
        terms.entropy_beta += beta_entropy(a, b);
      }
    }
  }

  const Eigen::VectorXd log_sticks = detail::expected_log_sticks(state);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    terms.z_prior += state.nu_z.row(t).dot(log_sticks);
  }
  for (Eigen::Index f = 0; f + 1 < f_count; ++f) {
    const double a = state.gamma(f, 0);
    const double b = state.gamma(f, 1);
    const double e_log_comp = digamma(b) - digamma(a + b);
    terms.phi_prior += (h.alpha1 - 1.0) * e_log_comp - lbeta(1.0, h.alpha1);
    terms.entropy_phi += beta_entropy(a, b);
  }

  const double gaussian_dims =
      static_cast<double>(t_count * d + f_count * d + f_count * k_count * d +
                          t_count * f_count * k_count);
  terms.entropy_gaussian = 0.5 * gaussian_dims * (kLogTwoPi + 1.0);

  return terms;
}

double elbo(const VariationalState& state, const MultitaskDataset& data,
            const Hyperparameters& h) {
  return elbo_terms(state, data, h).total();
}

}  // namespace taskmix
