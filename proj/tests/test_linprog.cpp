#include "doctest.h"
#include "mimocap/decomposition.hpp"
#include "mimocap/errors.hpp"
#include "mimocap/linprog.hpp"
#include "test_support.hpp"

using namespace mimocap;

TEST_CASE("lp oracle basic points") {
  auto m = validate_channel(testsup::fig1(), 1.0, 0.9);

  auto zero = lp_oracle_min_energy(m, Eigen::Vector2d(0, 0));
  CHECK(zero.objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.x.lpNorm<1>() == doctest::Approx(0.0).epsilon(1e-12));

  // full corner is the unique feasible point
  Eigen::VectorXd corner = m.H * Eigen::Vector3d(1, 1, 1);
  auto full = lp_oracle_min_energy(m, corner);
  CHECK(full.objective == doctest::Approx(3.0).epsilon(1e-9));
  CHECK((full.x - Eigen::Vector3d(1, 1, 1)).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("lp oracle infeasible outside the zonotope") {
  auto m = validate_channel(testsup::fig1(), 1.0, 0.9);
  CHECK_THROWS_AS(lp_oracle_min_energy(m, Eigen::Vector2d(100, 100)),
                  InfeasibleError);
  CHECK_THROWS_AS(lp_oracle_min_energy(m, Eigen::Vector2d(-0.5, 1.0)),
                  InfeasibleError);
}

TEST_CASE("lp matches interior reconstruction") {
  auto m = validate_channel(testsup::fig1(), 1.0, 0.9);
  Eigen::VectorXd xbar = m.H * Eigen::Vector3d(0.3, 0.4, 0.2);
  auto r = lp_oracle_min_energy(m, xbar);
  CHECK((m.H * r.x - xbar).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(r.objective <= 0.3 + 0.4 + 0.2 + 1e-9);
}

TEST_CASE("lp respects box bounds on random instances") {
  mimocap::Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = testsup::random_channel(rng, 2, 4, 1.0, 1.0);
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.uniform();
    Eigen::VectorXd xbar = m.H * x;
    auto r = lp_oracle_min_energy(m, xbar);
    CHECK(r.objective <= x.lpNorm<1>() + 1e-9);
    for (int i = 0; i < 4; ++i) {
      CHECK(r.x(i) >= -1e-9);
      CHECK(r.x(i) <= 1.0 + 1e-9);
    }
    CHECK((m.H * r.x - xbar).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("volume mc guard") {
  auto m = validate_channel(testsup::fig1(), 1.0, 0.9);
  CHECK_THROWS_AS(zonotope_volume_mc(m, 0, 1), std::invalid_argument);
}

TEST_CASE("volume mc matches determinant sums") {
  // dets 1, 1, 1 -> V_H = 3
  auto m = validate_channel(testsup::mat(2, 3, {1, 0, 1, 0, 1, 1}), 1.0, 1.0);
  auto ve = zonotope_volume_mc(m, 100000, 99);
  CHECK(std::abs(ve.estimate - 3.0) < 3.0 * ve.std_error + 1e-9);

  // fig1 dets: 3, 4, 2 -> 9
  auto m1 = validate_channel(testsup::fig1(), 1.0, 0.9);
  auto ve1 = zonotope_volume_mc(m1, 100000, 7);
  CHECK(std::abs(ve1.estimate - 9.0) < 3.0 * ve1.std_error + 1e-9);
}
