#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "taskmix/math.hpp"

using namespace taskmix;

TEST_CASE("digamma matches known values") {
  CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(0.4227843350984671).epsilon(1e-12));
  CHECK(digamma(10.0) == doctest::Approx(2.251752589066721).epsilon(1e-12));
}

TEST_CASE("digamma satisfies the recurrence") {
  for (double x : {0.1, 0.37, 1.0, 2.5, 7.0, 42.0, 1234.5}) {
    CHECK(digamma(x + 1.0) ==
          doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-11));
  }
}

TEST_CASE("digamma rejects the nonpositive domain") {
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.5), std::domain_error);
  CHECK_THROWS_AS(digamma(std::numeric_limits<double>::quiet_NaN()),
                  std::domain_error);
}

TEST_CASE("lbeta matches known values and is symmetric") {
  CHECK(lbeta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-13));
  CHECK(lbeta(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lbeta(3.7, 0.4) == doctest::Approx(lbeta(0.4, 3.7)).epsilon(1e-13));
}

TEST_CASE("beta entropy of the uniform is zero") {
  CHECK(beta_entropy(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(beta_entropy(2.0, 2.0) ==
        doctest::Approx(-0.1250928025613882).epsilon(1e-12));
}

TEST_CASE("logistic is stable at extremes") {
  CHECK(logistic(0.0) == doctest::Approx(0.5));
  CHECK(logistic(800.0) == doctest::Approx(1.0));
  CHECK(logistic(-800.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(log_logistic(-745.0)));
  CHECK(log_logistic(-745.0) == doctest::Approx(-745.0).epsilon(1e-10));
  CHECK(log_logistic(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("jj curvature extends continuously to zero") {
  CHECK(jj_lambda(0.0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(jj_lambda(1e-9) == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(jj_lambda(2.0) ==
        doctest::Approx(std::tanh(1.0) / 8.0).epsilon(1e-13));
}

TEST_CASE("jj bound is tight exactly at xi equal to the magnitude") {
  for (double a : {-12.0, -3.2, -0.5, 0.0, 0.7, 4.1, 20.0}) {
    CHECK(std::abs(jj_lower_bound(a, std::abs(a)) - log_logistic(a)) < 1e-12);
  }
  CHECK_THROWS_AS(jj_lower_bound(1.0, -0.1), std::domain_error);
}

TEST_CASE("log_sum_exp handles extremes") {
  std::vector<double> empty;
  CHECK(log_sum_exp(empty) == -std::numeric_limits<double>::infinity());
  std::vector<double> far = {-1000.0, -1000.0};
  CHECK(log_sum_exp(far) ==
        doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-13));
  std::vector<double> mixed = {0.0, std::log(2.0)};
  CHECK(log_sum_exp(mixed) == doctest::Approx(std::log(3.0)).epsilon(1e-13));
}

TEST_CASE("xlogx and binary entropy honor the zero convention") {
  CHECK(xlogx(0.0) == 0.0);
  CHECK(xlogx(1.0) == 0.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}
