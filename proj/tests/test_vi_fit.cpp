#include <Eigen/SVD>
#include <cmath>

#include "doctest.h"
#include "instances.hpp"
#include "taskmix/errors.hpp"
#include "taskmix/model.hpp"
#include "taskmix/vi.hpp"

using namespace taskmix;
using taskmix::testing::Instance;
using taskmix::testing::InstanceCaps;
using taskmix::testing::random_instance;

TEST_CASE("fitting never lets the bound decrease") {
  const InstanceCaps caps{5, 4, 3, 2, 3, 9};
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    for (TaskType type : {TaskType::regression, TaskType::classification}) {
      const Instance inst = random_instance(seed, type, caps);
      const VariationalState state = fit(inst.data, inst.hyper);
      REQUIRE(state.elbo_trace.size() > 1);
      for (size_t i = 1; i < state.elbo_trace.size(); ++i) {
        const double prev = state.elbo_trace[i - 1];
        CHECK(state.elbo_trace[i] >= prev - 1e-8 * (1.0 + std::abs(prev)));
      }
      CHECK(state.elbo_trace.back() > state.elbo_trace.front());
    }
  }
}

TEST_CASE("fits are deterministic given the seed") {
  const Instance inst = random_instance(50, TaskType::classification);
  const VariationalState a = fit(inst.data, inst.hyper);
  const VariationalState b = fit(inst.data, inst.hyper);
  CHECK((a.nu_theta.array() == b.nu_theta.array()).all());
  CHECK((a.nu_mu.array() == b.nu_mu.array()).all());
  CHECK((a.nu_z.array() == b.nu_z.array()).all());
  CHECK(a.sigma == b.sigma);
  CHECK(a.elbo_trace == b.elbo_trace);
  Instance other = inst;
  other.hyper.seed += 1;
  const VariationalState c = fit(other.data, other.hyper);
  CHECK(!(a.nu_mu.array() == c.nu_mu.array()).all());
}

TEST_CASE("a single component with no factors reduces to a shared prior") {
  for (std::uint64_t seed : {60, 61, 62}) {
    for (TaskType type : {TaskType::regression, TaskType::classification}) {
      Instance inst = random_instance(seed, type, {5, 4, 1, 0, 4, 9});
      inst.hyper.truncation_f = 1;
      inst.hyper.truncation_k = 0;
      // Run to the coordinate fixed point; the reduction is a property of
      // the converged solution.
      inst.hyper.outer_iters = 50;
      inst.hyper.inner_tol = 1e-12;
      const VariationalState state = fit(inst.data, inst.hyper);
      for (Eigen::Index t = 0; t < state.num_tasks(); ++t) {
        CHECK(state.nu_z(t, 0) == 1.0);
      }
      // One Gaussian prior over all tasks: its mean is the
      // precision-weighted average of the task weights.
      const Eigen::VectorXd expected =
          (state.sigma * state.nu_theta.colwise().sum() /
           (state.sigma * state.num_tasks() + 1.0))
              .transpose();
      CHECK((state.nu_mu.row(0).transpose() - expected).cwiseAbs().maxCoeff() <
            1e-8);
    }
  }
}

TEST_CASE("a single component with few factors learns the subspace") {
  for (std::uint64_t seed : {70, 71, 72, 73}) {
    Hyperparameters gen;
    gen.truncation_f = 1;
    gen.truncation_k = 2;
    const Eigen::Index t_count = 8, d = 5;
    const GenerativeDraw draw = sample_prior(gen, t_count, d, seed, 25.0);
    Instance inst;
    inst.data.task_type = TaskType::regression;
    inst.data.feature_dim = d;
    Rng rng(seed + 1000);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      TaskData task;
      task.id = "task" + std::to_string(t);
      task.x.resize(40, d);
      task.y.resize(40);
      for (Eigen::Index i = 0; i < 40; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
          task.x(i, j) = rng.normal();
        }
        task.y[i] = draw.theta.row(t).dot(task.x.row(i)) + 0.3 * rng.normal();
      }
      inst.data.tasks.push_back(std::move(task));
    }
    inst.hyper.truncation_f = 1;
    inst.hyper.truncation_k = 2;
    inst.hyper.seed = seed;
    const VariationalState state = fit(inst.data, inst.hyper);
    // Deviations from the component mean should lie in the span of the
    // learned loading columns, up to the model's own noise scale.
    Eigen::MatrixXd deviations =
        state.nu_theta.rowwise() - state.nu_mu.row(0);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(state.nu_lambda[0],
                                       Eigen::ComputeThinU);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      rank += svd.singularValues()[i] > 1e-8 * svd.singularValues()[0];
    }
    const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);
    const Eigen::MatrixXd projector = basis * basis.transpose();
    const double noise = 3.0 / std::sqrt(state.sigma);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const Eigen::VectorXd row = deviations.row(t).transpose();
      const Eigen::VectorXd residual = row - projector * row;
      CHECK(residual.cwiseAbs().maxCoeff() < noise);
    }
  }
}

TEST_CASE("predictions follow the weight means") {
  const Instance reg = random_instance(80, TaskType::regression);
  const VariationalState state = fit(reg.data, reg.hyper);
  Eigen::MatrixXd x(3, reg.data.feature_dim);
  Rng rng(5);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.reshaped()[i] = rng.normal();
  }
  const Eigen::VectorXd fitted = predict(state, x, 0);
  const Eigen::VectorXd expected = x * state.nu_theta.row(0).transpose();
  CHECK((fitted - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(predict(state, x, state.num_tasks()), InvalidArgument);
  Eigen::MatrixXd wrong(2, reg.data.feature_dim + 1);
  wrong.setZero();
  CHECK_THROWS_AS(predict(state, wrong, 0), InvalidArgument);
}

TEST_CASE("classification predictions are probabilities") {
  const Instance cls = random_instance(81, TaskType::classification);
  const VariationalState state = fit(cls.data, cls.hyper);
  const Eigen::VectorXd p = predict(state, cls.data.tasks[0].x, 0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }
  const Eigen::VectorXd labels = labels_from_probabilities(p);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(labels[i] == (p[i] > 0.5 ? 1.0 : 0.0));
  }
}

TEST_CASE("invalid inputs are rejected up front") {
  Hyperparameters bad;
  bad.truncation_f = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = Hyperparameters{};
  bad.alpha2 = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = Hyperparameters{};
  bad.inner_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  MultitaskDataset empty;
  CHECK_THROWS_AS(init_state(empty, Hyperparameters{}), InvalidArgument);

  Instance inst = random_instance(90, TaskType::classification);
  inst.data.tasks[0].y[0] = 0.5;
  CHECK_THROWS_AS(inst.data.validate(), InvalidArgument);
  inst = random_instance(91, TaskType::regression);
  inst.data.tasks[0].id = inst.data.tasks[1].id;
  CHECK_THROWS_AS(inst.data.validate(), InvalidArgument);
  inst = random_instance(92, TaskType::regression);
  inst.data.tasks[0].y[0] = std::nan("");
  CHECK_THROWS_AS(inst.data.validate(), InvalidArgument);
}

TEST_CASE("the bound of an empty dataset is zero") {
  MultitaskDataset empty;
  empty.feature_dim = 3;
  VariationalState state;
  CHECK(elbo(state, empty, Hyperparameters{}) == 0.0);
}
