#include <numeric>

#include "doctest.h"
#include "mimocap/errors.hpp"
#include "mimocap/maxvar.hpp"
#include "test_support.hpp"

using namespace mimocap;

namespace {

DiscreteInput two_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        double pa) {
  DiscreteInput in;
  in.points = {a, b};
  in.probs = Eigen::Vector2d(pa, 1.0 - pa);
  return in;
}

}  // namespace

TEST_CASE("trace_cov basics") {
  auto m = validate_channel(testsup::mat(2, 3, {1, 0, 1, 0, 1, 1}), 1.0, 3.0);

  DiscreteInput single;
  single.points = {Eigen::Vector3d(0.5, 0.5, 0.5)};
  single.probs = Eigen::VectorXd::Ones(1);
  CHECK(trace_cov(m, single) == doctest::Approx(0.0));

  auto in = two_point(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1), 0.5);
  validate_discrete_input(m, in);
  CHECK(trace_cov(m, in) == doctest::Approx(2.0));
}

TEST_CASE("trace_cov reproduces the first table row") {
  auto m = validate_channel(testsup::table24(), 1.0, 1.5);
  auto in = two_point(Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(1, 1, 1, 1),
                      0.625);
  validate_discrete_input(m, in);
  CHECK(trace_cov(m, in) == doctest::Approx(16.3687).epsilon(1e-4));
}

TEST_CASE("trace_cov invariant under complementing the support") {
  auto m = validate_channel(testsup::table24(), 1.0, 4.0);
  mimocap::Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    DiscreteInput in;
    int n = 2 + static_cast<int>(rng.uniform() * 3);
    std::vector<double> p(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform() + 1e-3;
      s += p[i];
    }
    in.probs.resize(n);
    for (int i = 0; i < n; ++i) in.probs(i) = p[i] / s;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(4);
      for (int j = 0; j < 4; ++j) x(j) = rng.uniform();
      in.points.push_back(x);
    }
    DiscreteInput refl = in;
    for (auto& x : refl.points) x = Eigen::VectorXd::Ones(4) - x;
    CHECK(trace_cov(m, in) == doctest::Approx(trace_cov(m, refl)).epsilon(1e-12));
  }
}

TEST_CASE("discrete input validation") {
  auto m = validate_channel(testsup::table24(), 1.0, 0.5);
  auto in = two_point(Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(1, 1, 1, 1),
                      0.5);
  // average power 2 > alpha*A = 0.5
  CHECK_THROWS_AS(validate_discrete_input(m, in), std::invalid_argument);
  in = two_point(Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(0, 0, 0, 0), 0.5);
  CHECK_THROWS_AS(validate_discrete_input(m, in), std::invalid_argument);
}

TEST_CASE("R-matrix rank condition") {
  auto m = validate_channel(testsup::table24(), 1.0, 1.5);
  auto rr = check_R_rank(m);
  CHECK(rr.exhaustive);
  CHECK(rr.holds);

  // duplicated columns produce identical single-index rows
  Eigen::MatrixXd dup = testsup::mat(2, 4, {1, 1, 2, 0.5, 2, 2, 0.7, 1.5});
  auto md = validate_channel(dup, 1.0, 1.0);
  auto rd = check_R_rank(md);
  CHECK_FALSE(rd.holds);
  CHECK(rd.witness.has_value());

  // guard: n_R must be at least 2
  Eigen::MatrixXd h1 = testsup::mat(1, 3, {1, 2, 3});
  auto m1 = validate_channel(h1, 1.0, 1.0);
  CHECK_THROWS_AS(check_R_rank(m1), std::invalid_argument);
}

TEST_CASE("chain QP endpoint cases") {
  auto m = validate_channel(testsup::mat(2, 4, {1, 0, 1, 0, 0, 1, 0, 1}), 1.0,
                            2.0);
  std::vector<int> ord = {0, 1, 2, 3};

  // slack constraint on a symmetric channel: only 0 and the full corner
  auto sol = max_trace_chain(m, ord);
  CHECK(sol.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(sol.support_size == 2);

  // alpha = 0 forces the degenerate input
  m.alpha = 1e-12;
  auto z = max_trace_chain(m, ord);
  CHECK(z.value == doctest::Approx(0.0).epsilon(1e-9));

  std::vector<int> bad = {0, 1, 1, 3};
  CHECK_THROWS_AS(max_trace_chain(m, bad), std::invalid_argument);
}

TEST_CASE("table row 4 via its chain ordering") {
  auto m = validate_channel(testsup::table24(), 1.0, 0.3);
  auto sol = max_trace_chain(m, {0, 1, 2, 3});
  CHECK(sol.value == doctest::Approx(6.0142).epsilon(1e-3));
  REQUIRE(sol.input.points.size() == 2);
  // p(0) = 0.85, p(A,A,0,0) = 0.15
  for (int i = 0; i < 2; ++i) {
    double l1 = sol.input.points[i].lpNorm<1>();
    if (l1 < 0.5)
      CHECK(sol.input.probs(i) == doctest::Approx(0.85).epsilon(1e-3));
    else
      CHECK(l1 == doctest::Approx(2.0));
  }
}

TEST_CASE("max_trace reproduces printed values") {
  auto m = validate_channel(testsup::table24(), 1.0, 1.5);
  CHECK(max_trace(m).value == doctest::Approx(16.3687).epsilon(1e-3));
  m.alpha = 0.6;
  auto s06 = max_trace(m);
  CHECK(s06.value == doctest::Approx(9.9575).epsilon(1e-3));
  CHECK(s06.support_size == 3);

  auto m3 = validate_channel(testsup::table34(), 1.0, 0.75);
  auto s3 = max_trace(m3);
  CHECK(s3.value == doctest::Approx(20.8950).epsilon(1e-3));
  CHECK(s3.support_size == 3);
}

TEST_CASE("structural invariants of trace solutions") {
  mimocap::Rng rng(19);
  for (int t = 0; t < 10; ++t) {
    auto m = testsup::random_channel(rng, 2, 4, 1.0, 0.4 + rng.uniform());
    auto sol = max_trace(m);
    // binary chain with origin mass
    bool has_origin = false;
    for (int i = 0; i < sol.input.probs.size(); ++i) {
      const auto& x = sol.input.points[i];
      for (int j = 0; j < x.size(); ++j)
        CHECK((x(j) == 0.0 || x(j) == m.A));
      if (x.lpNorm<1>() == 0.0 && sol.input.probs(i) > 0.0) has_origin = true;
    }
    CHECK(has_origin);
    // componentwise chain
    auto pts = sol.input.points;
    std::sort(pts.begin(), pts.end(),
              [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                return a.lpNorm<1>() < b.lpNorm<1>();
              });
    for (size_t i = 1; i < pts.size(); ++i)
      for (int j = 0; j < pts[i].size(); ++j)
        CHECK(pts[i - 1](j) <= pts[i](j) + 1e-12);
    validate_discrete_input(m, sol.input);
  }
}

TEST_CASE("monotone in alpha and capped at n_T/2") {
  auto m = validate_channel(testsup::table24(), 1.0, 0.2);
  double prev = 0.0;
  for (double a : {0.2, 0.5, 0.8, 1.2, 1.6, 2.0, 2.5}) {
    m.alpha = a;
    double v = max_trace(m).value;
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  m.alpha = 2.0;  // n_T/2
  double cap = max_trace(m).value;
  m.alpha = 3.5;
  CHECK(max_trace(m).value == doctest::Approx(cap).epsilon(1e-9));
}

TEST_CASE("brute force oracle agrees") {
  // all table rows within 1e-3 relative
  for (auto& [H, alpha, expect] :
       std::vector<std::tuple<Eigen::MatrixXd, double, double>>{
           {testsup::table24(), 1.5, 16.3687},
           {testsup::table24(), 0.9, 12.957},
           {testsup::table24(), 0.6, 9.9575},
           {testsup::table24(), 0.3, 6.0142},
           {testsup::table34(), 0.9, 23.8405},
           {testsup::table34(), 0.75, 20.8950},
           {testsup::table34(), 0.6, 17.7968}}) {
    auto m = validate_channel(H, 1.0, alpha);
    double bf = brute_force_max_trace(m);
    CHECK(bf == doctest::Approx(expect).epsilon(1e-3));
    CHECK(max_trace(m).value == doctest::Approx(bf).epsilon(1e-6));
  }

  // unconstrained above n_T/2
  auto m = validate_channel(testsup::table24(), 1.0, 2.0);
  double unc = brute_force_max_trace(m);
  m.alpha = 5.0;
  CHECK(brute_force_max_trace(m) == doctest::Approx(unc).epsilon(1e-9));
}

TEST_CASE("brute force matches chain search on random channels") {
  mimocap::Rng rng(29);
  for (int t = 0; t < 20; ++t) {
    auto m = testsup::random_channel(rng, 2, 3, 1.0, 0.3 + 1.2 * rng.uniform());
    double bf = brute_force_max_trace(m);
    double ch = max_trace(m).value;
    CHECK(ch == doctest::Approx(bf).epsilon(1e-6));
  }
}
