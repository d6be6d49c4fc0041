#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "taskmix/errors.hpp"
#include "taskmix/model.hpp"

using namespace taskmix;
using taskmix::testing::chi_square_99;

namespace {

Hyperparameters basic_hyper(int f, int k) {
  Hyperparameters h;
  h.truncation_f = f;
  h.truncation_k = k;
  return h;
}

}  // namespace

TEST_CASE("prior draws have coherent shapes") {
  const Hyperparameters h = basic_hyper(4, 3);
  const GenerativeDraw draw = sample_prior(h, 6, 5, 9);
  CHECK(draw.theta.rows() == 6);
  CHECK(draw.theta.cols() == 5);
  CHECK(draw.mu.rows() == 4);
  CHECK(draw.mu.cols() == 5);
  CHECK(draw.lambda.size() == 4);
  CHECK(draw.lambda[0].rows() == 5);
  CHECK(draw.lambda[0].cols() == 3);
  CHECK(draw.s.rows() == 6);
  CHECK(draw.s.cols() == 3);
  CHECK(draw.b.rows() == 6);
  CHECK(draw.b.cols() == 3);
  CHECK(draw.z.size() == 6);
  CHECK(draw.phi.size() == 4);
  CHECK(draw.phi[3] == 1.0);
  CHECK(draw.beta.rows() == 4);
  CHECK(draw.beta.cols() == 3);
  for (int z : draw.z) {
    CHECK(z >= 0);
    CHECK(z < 4);
  }
  for (Eigen::Index i = 0; i < draw.b.size(); ++i) {
    const int bit = draw.b.reshaped()[i];
    CHECK((bit == 0 || bit == 1));
  }
}

TEST_CASE("prior draws are seed-deterministic") {
  const Hyperparameters h = basic_hyper(3, 2);
  const GenerativeDraw a = sample_prior(h, 4, 3, 123);
  const GenerativeDraw b = sample_prior(h, 4, 3, 123);
  const GenerativeDraw c = sample_prior(h, 4, 3, 124);
  CHECK((a.theta.array() == b.theta.array()).all());
  CHECK((a.phi.array() == b.phi.array()).all());
  CHECK(a.z == b.z);
  CHECK(!(a.theta.array() == c.theta.array()).all());
}

TEST_CASE("assignment frequencies follow the stick prior") {
  Hyperparameters h = basic_hyper(3, 0);
  h.alpha1 = 1.0;
  // With unit concentration the truncated stick weights have means
  // 1/2, 1/4, 1/4.
  const double expected[3] = {0.5, 0.25, 0.25};
  int counts[3] = {0, 0, 0};
  const int draws = 400;
  const Eigen::Index tasks = 10;
  for (int d = 0; d < draws; ++d) {
    const GenerativeDraw g = sample_prior(h, tasks, 2, 1000 + d);
    for (int z : g.z) {
      ++counts[z];
    }
  }
  const double total = draws * tasks;
  double stat = 0.0;
  for (int f = 0; f < 3; ++f) {
    const double want = expected[f] * total;
    stat += (counts[f] - want) * (counts[f] - want) / want;
  }
  CHECK(stat < chi_square_99(2));
}

TEST_CASE("activation frequency matches the sparse beta prior") {
  Hyperparameters h = basic_hyper(1, 4);
  h.alpha2 = 2.0;
  // b averages E[beta] = a/(a+1) with a = alpha2/K.
  const double a = h.alpha2 / h.truncation_k;
  const double expected = a / (a + 1.0);
  double on = 0.0, n = 0.0;
  for (int d = 0; d < 2000; ++d) {
    const GenerativeDraw g = sample_prior(h, 5, 2, 5000 + d);
    on += g.b.cast<double>().sum();
    n += g.b.size();
  }
  CHECK(std::abs(on / n - expected) < 0.01);
}

TEST_CASE("weights scatter around the component mean at the pinned precision") {
  Hyperparameters h = basic_hyper(2, 2);
  const double sigma = 4.0;
  double sq = 0.0, n = 0.0;
  for (int d = 0; d < 3000; ++d) {
    const GenerativeDraw g = sample_prior(h, 3, 4, 9000 + d, sigma);
    for (Eigen::Index t = 0; t < 3; ++t) {
      const int f = g.z[t];
      Eigen::VectorXd implied = g.mu.row(f).transpose();
      for (int k = 0; k < 2; ++k) {
        implied += g.lambda[f].col(k) * (g.s(t, k) * g.b(t, k));
      }
      const Eigen::VectorXd resid = g.theta.row(t).transpose() - implied;
      sq += resid.squaredNorm();
      n += resid.size();
    }
  }
  CHECK(std::abs(sq / n - 1.0 / sigma) < 0.01);
}

TEST_CASE("prior sampling validates its arguments") {
  const Hyperparameters h = basic_hyper(2, 1);
  CHECK_THROWS_AS(sample_prior(h, 0, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_prior(h, 3, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_prior(h, 3, 3, 1, 0.0), InvalidArgument);
  Hyperparameters bad = h;
  bad.alpha1 = -1.0;
  CHECK_THROWS_AS(sample_prior(bad, 3, 3, 1), InvalidArgument);
}

TEST_CASE("regression log likelihood matches the direct formula") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd theta(2);
  theta << 0.5, -1.0;
  Eigen::VectorXd y(3);
  y << 0.2, -0.8, -0.1;
  const double rss = (y - x * theta).squaredNorm();
  const double expected =
      -0.5 * rss - 1.5 * std::log(2.0 * 3.14159265358979323846);
  CHECK(loglik_regression(theta, x, y) == doctest::Approx(expected).epsilon(1e-13));
  Eigen::VectorXd short_y(2);
  short_y << 0.0, 0.0;
  CHECK_THROWS_AS(loglik_regression(theta, x, short_y), InvalidArgument);
}
