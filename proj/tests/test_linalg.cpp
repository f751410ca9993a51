#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dkrrt/error.hpp"
#include "dkrrt/linalg.hpp"
#include "oracles.hpp"

using namespace dkrrt;

TEST_CASE("pinv of identity and rank-deficient diagonal") {
  CHECK((pinv(MatrixXd::Identity(3, 3)) - MatrixXd::Identity(3, 3)).norm() == 0.0);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  MatrixXd expected = MatrixXd::Zero(2, 2);
  expected(0, 0) = 0.5;
  CHECK((pinv(d) - expected).norm() < 1e-15);
}

TEST_CASE("pinv matches the normal-equations oracle on full-rank tall matrices") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const MatrixXd a = oracle::well_conditioned(5, 3, rng);
    CHECK((pinv(a) - oracle::normal_equations_pinv(a)).norm() < 1e-10);
  }
}

TEST_CASE("Penrose conditions hold on random well-conditioned matrices") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const int r = 2 + static_cast<int>(rng() % 6), c = 2 + static_cast<int>(rng() % 6);
    const MatrixXd a = oracle::well_conditioned(r, c, rng);
    const MatrixXd p = pinv(a);
    CHECK((a * p * a - a).norm() < 1e-10);
    CHECK((p * a * p - p).norm() < 1e-10);
    CHECK(((a * p).transpose() - a * p).norm() < 1e-10);
    CHECK(((p * a).transpose() - p * a).norm() < 1e-10);
  }
}

TEST_CASE("pinv rejects bad input") {
  MatrixXd a = MatrixXd::Ones(2, 2);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pinv(a), Error);
  CHECK_THROWS_AS(pinv(MatrixXd::Ones(2, 2), 0.0), Error);
  CHECK_THROWS_AS(pinv(MatrixXd::Ones(2, 2), 1.0), Error);
}

TEST_CASE("numerical rank and ridge solve") {
  MatrixXd a(3, 4);
  a << 1, 2, 3, 4, 2, 4, 6, 8, 0, 1, 0, 1;
  CHECK(numerical_rank(a) == 2);

  std::mt19937_64 rng(9);
  const MatrixXd r = oracle::well_conditioned(3, 20, rng);
  const MatrixXd t = oracle::well_conditioned(2, 20, rng);
  const double lambda = 0.3;
  const MatrixXd theta = solve_right_least_squares(t, r, 1e-10, lambda);
  // normal equations of the ridge problem
  const MatrixXd expected =
      t * r.transpose() * (r * r.transpose() + lambda * MatrixXd::Identity(3, 3)).inverse();
  CHECK((theta - expected).norm() < 1e-10);
}

TEST_CASE("expm agrees with a long Taylor series") {
  MatrixXd a(3, 3);
  a << 0.1, -0.4, 0.2, 0.3, -0.2, 0.05, 0.0, 0.25, -0.1;
  MatrixXd sum = MatrixXd::Identity(3, 3), term = MatrixXd::Identity(3, 3);
  for (int k = 1; k < 40; ++k) {
    term = term * a / k;
    sum += term;
  }
  CHECK((expm(a) - sum).norm() < 1e-13);
  CHECK((expm(MatrixXd::Zero(2, 2)) - MatrixXd::Identity(2, 2)).norm() == 0.0);
}
