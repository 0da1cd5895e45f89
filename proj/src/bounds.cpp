#include "mimocap/bounds.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mimocap/errors.hpp"
#include "mimocap/numutil.hpp"

namespace mimocap {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
const double kTwoPiE = 2.0 * M_PI * M_E;

// 1/mu - 1/(e^mu - 1), strictly decreasing from 1/2 to 0 on (0, inf)
double mu_equation_lhs(double mu) {
  if (mu < 1e-2) {
    const double m2 = mu * mu;
    return 0.5 - mu / 12.0 + mu * m2 / 720.0 - m2 * m2 * mu / 30240.0;
  }
  return 1.0 / mu - 1.0 / std::expm1(mu);
}

double qfunc(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

double solve_mu(double lam_over_nr) {
  if (!(lam_over_nr > 0.0) || !(lam_over_nr < 0.5))
    throw OutOfRangeError("solve_mu: argument must lie in (0, 1/2)");
  double lo = 1e-8, hi = 1e8;
  while (mu_equation_lhs(lo) <= lam_over_nr && lo > 1e-300) lo *= 1e-2;
  while (mu_equation_lhs(hi) >= lam_over_nr && hi < 1e300) hi *= 1e2;
  // bisect in log space; the left side is strictly decreasing
  double llo = std::log(lo), lhi = std::log(hi);
  for (int it = 0; it < 200; ++it) {
    double lm = 0.5 * (llo + lhi);
    double f = mu_equation_lhs(std::exp(lm));
    if (f > lam_over_nr)
      llo = lm;
    else
      lhi = lm;
  }
  double mu = std::exp(0.5 * (llo + lhi));
  return mu;
}

double truncated_exp_entropy_gap(double mu, int nr) {
  if (mu < 1e-3) {
    const double m2 = mu * mu;
    return nr * (-m2 / 24.0 + m2 * m2 / 960.0);
  }
  double log_ratio = std::log(mu / (-std::expm1(-mu)));
  double mean_term = mu / std::expm1(mu);
  return nr * (1.0 - log_ratio - mean_term);
}

KLProjection kl_project(const Eigen::VectorXd& q, const Eigen::VectorXd& s,
                        double target) {
  const int n = static_cast<int>(q.size());
  const double smin = s.minCoeff();
  const double smax = s.maxCoeff();
  const double srange = std::max(smax - smin, 1e-300);
  const double tol = 1e-12 * std::max(1.0, std::abs(smax));

  if (target < smin - tol || target > smax + tol)
    throw UnreachableError("kl_project: target outside the range of s");

  KLProjection r;
  auto degenerate = [&](bool at_max) {
    double sval = at_max ? smax : smin;
    r.p = Eigen::VectorXd::Zero(n);
    double qsum = 0.0;
    for (int i = 0; i < n; ++i)
      if (std::abs(s(i) - sval) <= 1e-12 * std::max(1.0, std::abs(sval))) {
        r.p(i) = q(i);
        qsum += q(i);
      }
    r.p /= qsum;
    r.divergence = -std::log(qsum);
    r.theta = at_max ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    return r;
  };
  if (target >= smax - tol) return degenerate(true);
  if (target <= smin + tol) return degenerate(false);

  auto tilted = [&](double theta) {
    // returns (mean, log partition)
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      m = std::max(m, std::log(q(i)) + theta * s(i));
    double z = 0.0, zs = 0.0;
    for (int i = 0; i < n; ++i) {
      double w = std::exp(std::log(q(i)) + theta * s(i) - m);
      z += w;
      zs += w * s(i);
    }
    return std::pair<double, double>(zs / z, m + std::log(z));
  };

  double B = 1.0 / srange;
  while (tilted(B).first < target && B < 1e8 / srange) B *= 2.0;
  double Blo = -1.0 / srange;
  while (tilted(Blo).first > target && Blo > -1e8 / srange) Blo *= 2.0;

  double lo = Blo, hi = B;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (tilted(mid).first < target)
      lo = mid;
    else
      hi = mid;
  }
  double theta = 0.5 * (lo + hi);
  auto [mean, logz] = tilted(theta);
  (void)mean;
  r.theta = theta;
  r.p.resize(n);
  for (int i = 0; i < n; ++i)
    r.p(i) = std::exp(std::log(q(i)) + theta * s(i) - logz);
  r.divergence = theta * target - logz;
  if (r.divergence < 0.0 && r.divergence > -1e-13) r.divergence = 0.0;
  return r;
}

namespace {

void cell_weights(const Decomposition& dec, Eigen::VectorXd& q,
                  Eigen::VectorXd& s) {
  const int n = static_cast<int>(dec.cells.size());
  q.resize(n);
  s.resize(n);
  for (int i = 0; i < n; ++i) {
    q(i) = dec.cells[i].q;
    s(i) = dec.cells[i].s;
  }
}

}  // namespace

double nu(const Decomposition& decomp, double alpha) {
  const int nr = decomp.nr();
  if (alpha >= decomp.alpha_th)
    throw EmptyIntervalError("nu: requires alpha < alpha_th");
  double lo = std::max(0.0, 0.5 * nr + alpha - decomp.alpha_th);
  double hi = std::min(0.5 * nr, alpha);
  lo += 1e-9;
  hi -= 1e-9;
  if (!(lo < hi)) throw EmptyIntervalError("nu: empty lambda interval");

  Eigen::VectorXd q, s;
  cell_weights(decomp, q, s);

  auto phi = [&](double lam) {
    double mu = solve_mu(lam / nr);
    double gap = truncated_exp_entropy_gap(mu, nr);
    double div = kl_project(q, s, alpha - lam).divergence;
    return gap - div;
  };
  return golden_max(phi, lo, hi, 1e-8).fx;
}

double lower_bound_epi_uniform(const Decomposition& decomp) {
  const int nr = decomp.nr();
  double x = std::pow(decomp.A, 2 * nr) * decomp.V_H * decomp.V_H /
             std::pow(kTwoPiE, nr);
  return 0.5 * std::log1p(x);
}

double lower_bound_epi_exponential(const Decomposition& decomp, double nu_val,
                                   bool) {
  const int nr = decomp.nr();
  double x = std::pow(decomp.A, 2 * nr) * decomp.V_H * decomp.V_H *
             std::exp(2.0 * nu_val) / std::pow(kTwoPiE, nr);
  return 0.5 * std::log1p(x);
}

double lower_bound_epi_exponential(const Decomposition& decomp, double alpha) {
  return lower_bound_epi_exponential(decomp, nu(decomp, alpha), true);
}

double upper_bound_peak(const Decomposition& decomp) {
  const double A = decomp.A;
  std::vector<double> terms;
  terms.reserve(decomp.cells.size());
  for (const auto& c : decomp.cells) {
    double cu = 0.0;
    for (int l = 0; l < c.sigma.size(); ++l)
      cu += std::log(c.sigma(l) + A / std::sqrt(kTwoPiE));
    terms.push_back(std::log(c.q) + cu);
  }
  return std::log(decomp.V_H) + log_sum_exp(terms);
}

namespace {

// inner sup over tilted weights under sum p_U s_U <= alpha, for given
// per-cell scores; returns LSE(log q + score - t s) + t alpha at the optimal
// multiplier t >= 0
double constrained_tilt_value(const Eigen::VectorXd& q,
                              const Eigen::VectorXd& s,
                              const Eigen::VectorXd& score, double alpha) {
  const int n = static_cast<int>(q.size());
  auto stats = [&](double t) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = std::log(q(i)) + score(i) - t * s(i);
    double m = *std::max_element(w.begin(), w.end());
    double z = 0.0, zs = 0.0;
    for (int i = 0; i < n; ++i) {
      double e = std::exp(w[i] - m);
      z += e;
      zs += e * s(i);
    }
    return std::pair<double, double>(zs / z, m + std::log(z));
  };
  auto [mean0, lse0] = stats(0.0);
  if (mean0 <= alpha) return lse0;
  double thi = 1.0;
  while (stats(thi).first > alpha && thi < 1e10) thi *= 2.0;
  double tlo = 0.0;
  for (int it = 0; it < 100; ++it) {
    double tm = 0.5 * (tlo + thi);
    if (stats(tm).first > alpha)
      tlo = tm;
    else
      thi = tm;
  }
  double t = 0.5 * (tlo + thi);
  return stats(t).second + t * alpha;
}

}  // namespace

double upper_bound_mu_objective(const Decomposition& decomp, double alpha,
                                double mu) {
  const double A = decomp.A;
  const int n = static_cast<int>(decomp.cells.size());
  Eigen::VectorXd q, s;
  cell_weights(decomp, q, s);
  const double k1 = (mu < 1e-9) ? 1.0 - 0.5 * mu : -std::expm1(-mu) / mu;

  Eigen::VectorXd score(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = decomp.cells[i];
    double cu = 0.0;
    for (int l = 0; l < c.sigma.size(); ++l) {
      double sig = c.sigma(l);
      cu += std::log(sig + A / std::sqrt(kTwoPiE) * k1);
      cu += mu / (A * std::sqrt(2.0 * M_PI)) * sig *
            (1.0 - std::exp(-A * A / (2.0 * sig * sig)));
    }
    score(i) = cu - mu * c.s;
  }
  return std::log(decomp.V_H) + mu * alpha +
         constrained_tilt_value(q, s, score, alpha);
}

double upper_bound_mu(const Decomposition& decomp, double alpha) {
  if (alpha >= decomp.alpha_th)
    throw EmptyIntervalError("upper_bound_mu: requires alpha < alpha_th");
  auto f = [&](double w) {
    return upper_bound_mu_objective(decomp, alpha, std::exp(w));
  };
  return golden_min(f, -20.0, 20.0, 1e-8).fx;
}

double upper_bound_mu_delta_objective(const Decomposition& decomp, double alpha,
                                      double delta, double mu) {
  const double A = decomp.A;
  const int n = static_cast<int>(decomp.cells.size());
  Eigen::VectorXd q, s;
  cell_weights(decomp, q, s);

  Eigen::VectorXd score(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = decomp.cells[i];
    double cu = 0.0;
    for (int l = 0; l < c.sigma.size(); ++l) {
      double sig = c.sigma(l);
      double dsig = delta / sig;
      // log( A (e^{mu d/A} - e^{-mu(1+d/A)}) / (sqrt(2 pi e) mu (1-2Q)) )
      double numer_log = mu * delta / A +
                         std::log(-std::expm1(-mu * (1.0 + 2.0 * delta / A)));
      double denom_log = 0.5 * std::log(kTwoPiE) + std::log(mu) +
                         std::log(std::erf(dsig / std::sqrt(2.0)));
      cu += std::log(A) + numer_log - denom_log;
      cu += qfunc(dsig);
      cu += delta / (std::sqrt(2.0 * M_PI) * sig) *
            std::exp(-delta * delta / (2.0 * sig * sig));
      cu += mu / (A * std::sqrt(2.0 * M_PI)) * sig *
            (std::exp(-delta * delta / (2.0 * sig * sig)) -
             std::exp(-(A + delta) * (A + delta) / (2.0 * sig * sig)));
    }
    score(i) = cu - mu * c.s;
  }
  return std::log(decomp.V_H) + mu * alpha +
         constrained_tilt_value(q, s, score, alpha);
}

double upper_bound_mu_delta(const Decomposition& decomp, double alpha) {
  if (alpha >= decomp.alpha_th)
    throw EmptyIntervalError("upper_bound_mu_delta: requires alpha < alpha_th");
  const double A = decomp.A;
  // coordinate descent in (log mu, log delta/A)
  auto f = [&](double w, double u) {
    return upper_bound_mu_delta_objective(decomp, alpha, A * std::exp(u),
                                          std::exp(w));
  };
  double w = golden_min(
                 [&](double ww) {
                   return upper_bound_mu_objective(decomp, alpha, std::exp(ww));
                 },
                 -20.0, 20.0, 1e-6)
                 .x;
  double u = -1.0;
  double best = f(w, u);
  for (int round = 0; round < 50; ++round) {
    auto ru = golden_min([&](double uu) { return f(w, uu); }, -20.0, 5.0, 1e-8);
    u = ru.x;
    auto rw = golden_min([&](double ww) { return f(ww, u); }, -20.0, 20.0, 1e-8);
    w = rw.x;
    if (best - rw.fx < 1e-9 && round > 0) {
      best = std::min(best, rw.fx);
      break;
    }
    best = std::min(best, rw.fx);
  }
  return best;
}

double upper_bound_trace_from_norm(const ChannelModel& model,
                                   double trace_norm) {
  const int nr = model.nr();
  double tr = trace_norm * model.A * model.A;
  return 0.5 * nr * std::log1p(tr / nr);
}

double upper_bound_trace(const ChannelModel& model) {
  ChannelModel unit = model;
  unit.A = 1.0;
  return upper_bound_trace_from_norm(model, max_trace(unit).value);
}

double high_snr_asymptote_from_nu(const Decomposition& decomp, double alpha,
                                  double nu_val) {
  const int nr = decomp.nr();
  double base = std::log(decomp.V_H) - 0.5 * nr * std::log(kTwoPiE);
  if (alpha < decomp.alpha_th) return base + nu_val;
  return base;
}

double high_snr_asymptote(const Decomposition& decomp, double alpha) {
  if (alpha < decomp.alpha_th)
    return high_snr_asymptote_from_nu(decomp, alpha, nu(decomp, alpha));
  return high_snr_asymptote_from_nu(decomp, alpha, 0.0);
}

double low_snr_slope(const ChannelModel& model) {
  ChannelModel unit = model;
  unit.A = 1.0;
  return 0.5 * max_trace(unit).value;
}

AlphaCache make_alpha_cache(const ChannelModel& model, double alpha,
                            int threads) {
  ChannelModel m = model;
  m.alpha = alpha;
  AlphaCache c;
  c.alpha = alpha;
  c.alpha_used = effective_alpha(m);
  Decomposition dec = build_decomposition(m);
  c.below_threshold = c.alpha_used < dec.alpha_th;
  c.nu_val = c.below_threshold ? nu(dec, c.alpha_used) : kNan;
  ChannelModel unit = m;
  unit.A = 1.0;
  unit.alpha = alpha;
  c.trace_norm = max_trace(unit, threads).value;
  return c;
}

BoundReport compute_bound_report(const ChannelModel& model,
                                 const AlphaCache& cache, double A) {
  ChannelModel m = model;
  m.A = A;
  m.alpha = cache.alpha;
  Decomposition dec = build_decomposition(m);
  const double au = cache.alpha_used;

  BoundReport r;
  r.A_linear = A;
  r.A_dB = 10.0 * std::log10(A);
  r.alpha_used = au;
  r.ub_peak = upper_bound_peak(dec);
  r.ub_trace = upper_bound_trace_from_norm(m, cache.trace_norm);
  if (cache.below_threshold) {
    r.nu = cache.nu_val;
    r.lb_uniform = kNan;
    r.lb_exp = lower_bound_epi_exponential(dec, cache.nu_val, true);
    r.ub_mu = upper_bound_mu(dec, au);
    r.ub_mu_delta = upper_bound_mu_delta(dec, au);
  } else {
    r.nu = kNan;
    r.lb_uniform = lower_bound_epi_uniform(dec);
    r.lb_exp = kNan;
    r.ub_mu = kNan;
    r.ub_mu_delta = kNan;
  }
  return r;
}

}  // namespace mimocap
