#include "doctest.h"
#include "mimocap/bounds.hpp"
#include "mimocap/mi.hpp"
#include "test_support.hpp"

using namespace mimocap;

TEST_CASE("single mass point carries no information") {
  std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(1.0, -2.0)};
  Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
  auto est = mi_discrete_gaussian(pts, p, 50000, 1);
  CHECK(std::abs(est.value) <= 3.0 * est.std_error + 1e-9);
}

TEST_CASE("far separated points saturate log 2") {
  std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(0, 0),
                                      Eigen::Vector2d(100, 0)};
  Eigen::VectorXd p = Eigen::VectorXd::Constant(2, 0.5);
  auto est = mi_discrete_gaussian(pts, p, 100000, 2);
  CHECK(est.value == doctest::Approx(std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("matches 1-D quadrature oracle") {
  for (double d : {0.5, 1.0, 2.0}) {
    std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(0, 0),
                                        Eigen::Vector2d(d, 0)};
    Eigen::VectorXd p = Eigen::VectorXd::Constant(2, 0.5);
    auto est = mi_discrete_gaussian(pts, p, 400000, 3);
    double oracle = testsup::binary_awgn_mi_1d(d);
    CHECK(std::abs(est.value - oracle) <= 3.0 * est.std_error + 1e-6);
  }
}

TEST_CASE("estimate bounded by entropy of the index") {
  std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(0, 0),
                                      Eigen::Vector2d(0.7, 0.1),
                                      Eigen::Vector2d(0.1, 0.9)};
  Eigen::VectorXd p(3);
  p << 0.5, 0.25, 0.25;
  auto est = mi_discrete_gaussian(pts, p, 50000, 4);
  CHECK(est.value >= -3.0 * est.std_error);
  CHECK(est.value <= std::log(3.0) + 3.0 * est.std_error);
}

TEST_CASE("tiny probabilities dropped, degenerate pmf rejected") {
  std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(0, 0),
                                      Eigen::Vector2d(3, 0)};
  Eigen::VectorXd p(2);
  p << 1.0, 1e-18;
  auto est = mi_discrete_gaussian(pts, p, 20000, 5);
  CHECK(std::abs(est.value) <= 3.0 * est.std_error + 1e-9);

  Eigen::VectorXd bad(2);
  bad << 1e-18, 1e-18;
  CHECK_THROWS_AS(mi_discrete_gaussian(pts, bad, 20000, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(mi_discrete_gaussian(pts, p, 100, 5), std::invalid_argument);
}

TEST_CASE("doubling samples shrinks the error near sqrt(2)") {
  std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(0, 0),
                                      Eigen::Vector2d(1.3, 0.4)};
  Eigen::VectorXd p = Eigen::VectorXd::Constant(2, 0.5);
  double ratio_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto a = mi_discrete_gaussian(pts, p, 40000, 100 + seed);
    auto b = mi_discrete_gaussian(pts, p, 80000, 200 + seed);
    ratio_sum += a.std_error / b.std_error;
  }
  double mean_ratio = ratio_sum / 10.0;
  CHECK(mean_ratio > std::sqrt(2.0) / 1.5);
  CHECK(mean_ratio < std::sqrt(2.0) * 1.5);
}

TEST_CASE("k-point search stays feasible and below the trace bound") {
  auto m = validate_channel(testsup::fig7(), std::pow(10.0, -1.0), 0.9);
  auto dec = build_decomposition(m);
  auto res = k_point_lower_bound(dec, 0.9, 2, 400, 7, 20000, 100000);

  // feasibility of the reported input
  double cost = 0.0;
  for (int i = 0; i < res.input.probs.size(); ++i)
    cost += res.input.probs(i) * res.input.points[i].lpNorm<1>();
  CHECK(cost <= 0.9 * m.A + 1e-9);
  CHECK(res.input.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));

  double ub = upper_bound_trace(m);
  CHECK(res.mi.value <= ub + 3.0 * res.mi.std_error);
  CHECK(res.mi.value > 0.0);
}

TEST_CASE("nested mass point classes improve the bound") {
  auto m = validate_channel(testsup::fig7(), 1.0, 0.9);
  auto dec = build_decomposition(m);
  auto r2 = k_point_lower_bound(dec, 0.9, 2, 300, 11, 20000, 100000);
  auto r3 = k_point_lower_bound(dec, 0.9, 3, 300, 11, 20000, 100000);
  CHECK(r3.mi.value >= r2.mi.value - 2.0 * (r2.mi.std_error + r3.mi.std_error) - 5e-3);
}

TEST_CASE("guards") {
  auto m = validate_channel(testsup::fig7(), 1.0, 0.9);
  auto dec = build_decomposition(m);
  CHECK_THROWS_AS(k_point_lower_bound(dec, 0.9, 5, 100, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(k_point_lower_bound(dec, 0.0, 2, 100, 1),
                  mimocap::InfeasibleError);
}
