#include "doctest.h"
#include "mimocap/bounds.hpp"
#include "mimocap/errors.hpp"
#include "test_support.hpp"

using namespace mimocap;

namespace {

Decomposition fig7_decomp(double A, double alpha = 0.9) {
  auto m = validate_channel(testsup::fig7(), A, alpha);
  return build_decomposition(m);
}

}  // namespace

TEST_CASE("solve_mu endpoints and residual") {
  // near 1/2 the root collapses to zero
  CHECK(solve_mu(0.499999) < 1e-4);
  // near 0 it diverges
  CHECK(solve_mu(1e-5) > 1e4);

  for (double t : {0.25, 0.05, 0.4, 0.49, 0.01}) {
    double mu = solve_mu(t);
    double lhs = 1.0 / mu - 1.0 / std::expm1(mu);
    CHECK(std::abs(lhs - t) < 1e-12);
  }
  CHECK_THROWS_AS(solve_mu(0.0), OutOfRangeError);
  CHECK_THROWS_AS(solve_mu(0.5), OutOfRangeError);
  CHECK_THROWS_AS(solve_mu(0.7), OutOfRangeError);

  // strictly decreasing along an increasing grid
  double prev = 1e300;
  for (double lam = 0.01; lam < 0.5; lam += 0.01) {
    double mu = solve_mu(lam);
    CHECK(mu < prev);
    prev = mu;
  }
}

TEST_CASE("kl projection") {
  Eigen::Vector3d q(1.0 / 10.5, 5.0 / 10.5, 4.5 / 10.5);
  Eigen::Vector3d s(0.0, 1.0, 0.0);

  // untilted mean -> p = q, zero divergence
  double qmean = q.dot(s);
  auto r0 = kl_project(q, s, qmean);
  CHECK(r0.divergence == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((r0.p - q).lpNorm<Eigen::Infinity>() < 1e-10);

  // generic target met to 1e-12 with nonnegative divergence
  auto r = kl_project(q, s, 0.3);
  CHECK(std::abs(r.p.dot(s) - 0.3) < 1e-12);
  CHECK(r.divergence > 0.0);
  CHECK(std::abs(r.p.sum() - 1.0) < 1e-12);

  // all s equal: only the mean target is feasible and p = q
  Eigen::Vector3d s_const(2.0, 2.0, 2.0);
  auto rc = kl_project(q, s_const, 2.0);
  CHECK((rc.p - q).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(rc.divergence == doctest::Approx(0.0));

  // boundary degenerates to the conditional on the arg set
  auto rb = kl_project(q, s, 1.0);
  CHECK(rb.divergence == doctest::Approx(-std::log(5.0 / 10.5)));
  CHECK_THROWS_AS(kl_project(q, s, 1.5), UnreachableError);
  CHECK_THROWS_AS(kl_project(q, s, -0.1), UnreachableError);
}

TEST_CASE("nu: sign, monotonicity, threshold behaviour") {
  auto dec = fig7_decomp(1.0);
  CHECK_THROWS_AS(nu(dec, dec.alpha_th), EmptyIntervalError);
  CHECK_THROWS_AS(nu(dec, 2.0), EmptyIntervalError);

  double prev = -1e9;
  for (double a = 0.1; a < dec.alpha_th - 0.01; a += 0.1) {
    double v = nu(dec, a);
    CHECK(v < 0.0);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  // approaches zero at the threshold
  CHECK(nu(dec, dec.alpha_th - 1e-4) > -1e-2);

  // stable against tolerance refinement: dense grid oracle
  double v_opt = nu(dec, 0.9);
  Eigen::VectorXd q(3), s(3);
  for (int i = 0; i < 3; ++i) {
    q(i) = dec.cells[i].q;
    s(i) = dec.cells[i].s;
  }
  double best = -1e300;
  double lo = std::max(0.0, 1.0 + 0.9 - dec.alpha_th) + 1e-9;
  double hi = std::min(1.0, 0.9) - 1e-9;
  for (int i = 0; i <= 40000; ++i) {
    double lam = lo + (hi - lo) * i / 40000.0;
    double mu = solve_mu(lam / 2.0);
    double val = truncated_exp_entropy_gap(mu, 2) -
                 kl_project(q, s, 0.9 - lam).divergence;
    best = std::max(best, val);
  }
  CHECK(v_opt == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("epi lower bounds") {
  auto dec = fig7_decomp(1.0);
  double expected = 0.5 * std::log1p(110.25 / std::pow(2 * M_PI * M_E, 2));
  CHECK(lower_bound_epi_uniform(dec) == doctest::Approx(expected).epsilon(1e-12));

  // A -> 0 limit
  auto dec_small = fig7_decomp(1e-8);
  CHECK(lower_bound_epi_uniform(dec_small) < 1e-10);
  CHECK(lower_bound_epi_exponential(dec_small, 0.9) < 1e-10);

  // exponential converges to uniform at the threshold
  double at_th = lower_bound_epi_exponential(dec, dec.alpha_th - 1e-5);
  CHECK(at_th == doctest::Approx(lower_bound_epi_uniform(dec)).epsilon(1e-3));
}

TEST_CASE("peak upper bound closed form") {
  // single-cell decomposition: log V_H + c_U exactly
  Eigen::MatrixXd h(1, 2);
  h << 1.0, 0.0;
  auto m = validate_channel(h, 1.0, 0.4);
  auto dec = build_decomposition(m);
  REQUIRE(dec.cells.size() == 1);
  double cu = std::log(dec.cells[0].sigma(0) + 1.0 / std::sqrt(2 * M_PI * M_E));
  CHECK(upper_bound_peak(dec) ==
        doctest::Approx(std::log(dec.V_H) + cu).epsilon(1e-12));

  // high-SNR: bound - n_R log A approaches the unconstrained asymptote
  auto dec8 = fig7_decomp(1e8);
  double asy = high_snr_asymptote_from_nu(dec8, dec8.alpha_th + 1.0, 0.0);
  CHECK(upper_bound_peak(dec8) - 2.0 * std::log(1e8) ==
        doctest::Approx(asy).epsilon(1e-3));

  // finite and above the lower bound at moderate SNR
  auto dec10 = fig7_decomp(10.0);
  CHECK(upper_bound_peak(dec10) >= lower_bound_epi_uniform(dec10));
}

TEST_CASE("mu upper bound consistency near mu = 0") {
  auto dec = fig7_decomp(2.0);
  double peak = upper_bound_peak(dec);
  double at_tiny = upper_bound_mu_objective(dec, 0.9, 1e-8);
  CHECK(at_tiny == doctest::Approx(peak + 1e-8 * 0.9).epsilon(1e-9));
}

TEST_CASE("mu bound orders against lower bounds") {
  for (double adb : {0.0, 10.0, 25.0}) {
    auto dec = fig7_decomp(std::pow(10.0, adb / 10.0));
    double lb = lower_bound_epi_exponential(dec, 0.9);
    double ub = upper_bound_mu(dec, 0.9);
    double ubp = upper_bound_peak(dec);
    CHECK(lb <= ub + 1e-6);
    CHECK(lb <= ubp + 1e-6);
  }
}

TEST_CASE("mu-delta bound behaves and stays above the lower bound") {
  auto dec = fig7_decomp(std::pow(10.0, 1.5));
  double lb = lower_bound_epi_exponential(dec, 0.9);
  double ub = upper_bound_mu_delta(dec, 0.9);
  CHECK(lb <= ub + 1e-6);
}

TEST_CASE("high snr asymptote combines the pieces") {
  auto dec = fig7_decomp(1.0);
  double base = 0.5 * std::log(dec.V_H * dec.V_H /
                               std::pow(2 * M_PI * M_E, dec.nr()));
  CHECK(high_snr_asymptote(dec, 2.0) == doctest::Approx(base));
  double with_nu = high_snr_asymptote(dec, 0.9);
  CHECK(with_nu == doctest::Approx(base + nu(dec, 0.9)).epsilon(1e-9));
  CHECK(with_nu < base);
}

TEST_CASE("asymptotic convergence of the mu bound") {
  auto m = validate_channel(testsup::fig7(), 1.0, 0.9);
  AlphaCache cache = make_alpha_cache(m, 0.9);
  double asy = high_snr_asymptote_from_nu(fig7_decomp(1.0), 0.9, cache.nu_val);
  double prev_gap = 1e9;
  for (double adb : {40.0, 60.0, 80.0}) {
    double A = std::pow(10.0, adb / 10.0);
    auto dec = fig7_decomp(A);
    double gap = upper_bound_mu(dec, 0.9) - 2.0 * std::log(A) - asy;
    CHECK(gap < prev_gap);
    CHECK(gap > -1e-6);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3);
}

TEST_CASE("trace upper bound") {
  auto m = validate_channel(testsup::table24(), 1.0, 1.5);
  double expected = std::log1p(16.3687 / 2.0);
  CHECK(upper_bound_trace(m) == doctest::Approx(expected).epsilon(1e-3));

  // A -> 0: bound / A^2 -> half the slope
  double slope = low_snr_slope(m);
  m.A = 1e-4;
  double ratio = upper_bound_trace(m) / (1e-8);
  CHECK(ratio == doctest::Approx(0.5 * 2.0 * slope / 1.0).epsilon(1e-3));
}

TEST_CASE("low snr slope properties") {
  auto m = validate_channel(testsup::fig7(), 1.0, 0.1);
  double prev = 0.0;
  for (double a = 0.1; a < 1.6; a += 0.2) {
    m.alpha = a;
    double s = low_snr_slope(m);
    CHECK(s > prev);
    prev = s;
  }
  m.alpha = 1.5;  // n_T / 2
  double cap = low_snr_slope(m);
  m.alpha = 2.5;
  CHECK(low_snr_slope(m) == doctest::Approx(cap).epsilon(1e-9));

  auto m24 = validate_channel(testsup::table24(), 1.0, 0.3);
  CHECK(low_snr_slope(m24) == doctest::Approx(0.5 * 6.0142).epsilon(1e-3));
}

TEST_CASE("bound report wiring") {
  auto m = validate_channel(testsup::fig7(), 1.0, 0.9);
  AlphaCache cache = make_alpha_cache(m, 0.9);
  CHECK(cache.below_threshold);
  auto rep = compute_bound_report(m, cache, 10.0);
  CHECK(rep.A_dB == doctest::Approx(10.0));
  CHECK(std::isnan(rep.lb_uniform));
  CHECK_FALSE(std::isnan(rep.lb_exp));
  CHECK_FALSE(std::isnan(rep.ub_mu));
  CHECK(rep.nu < 0.0);

  AlphaCache above = make_alpha_cache(m, 1.49);
  CHECK_FALSE(above.below_threshold);
  auto rep2 = compute_bound_report(m, above, 10.0);
  CHECK(std::isnan(rep2.ub_mu));
  CHECK_FALSE(std::isnan(rep2.lb_uniform));
}
