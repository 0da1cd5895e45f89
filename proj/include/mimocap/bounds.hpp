#ifndef MIMOCAP_BOUNDS_HPP
#define MIMOCAP_BOUNDS_HPP

#include <Eigen/Dense>
#include <optional>

#include "mimocap/channel.hpp"
#include "mimocap/decomposition.hpp"
#include "mimocap/maxvar.hpp"

namespace mimocap {

/// Unique mu > 0 with 1/mu - exp(-mu)/(1-exp(-mu)) = lam_over_nr, for
/// lam_over_nr in (0, 1/2). Residual below 1e-12.
double solve_mu(double lam_over_nr);

/// n_R * (1 - log(mu/(1-e^-mu)) - mu e^-mu/(1-e^-mu)): differential-entropy
/// deficit (nats) of the product truncated exponential against uniform.
double truncated_exp_entropy_gap(double mu, int nr);

struct KLProjection {
  Eigen::VectorXd p;
  double divergence = 0.0;  // D(p||q), nats
  double theta = 0.0;       // tilt parameter; +-inf on degenerate boundaries
};

/// min D(p||q) s.t. sum_i p_i s_i = target. Exponential tilt with bisection
/// on the tilted mean; degenerate limits at the ends of the s-range.
KLProjection kl_project(const Eigen::VectorXd& q, const Eigen::VectorXd& s,
                        double target);

/// High-SNR power penalty (nats, negative) for alpha < alpha_th.
double nu(const Decomposition& decomp, double alpha);

double lower_bound_epi_uniform(const Decomposition& decomp);
double lower_bound_epi_exponential(const Decomposition& decomp, double alpha);
double lower_bound_epi_exponential(const Decomposition& decomp, double nu_val,
                                   bool);  // cached-nu overload

double upper_bound_peak(const Decomposition& decomp);

/// Duality bound objective at a fixed mu (inner sup over tilted weights in
/// closed form); upper_bound_mu takes the infimum over log mu in [-20, 20].
double upper_bound_mu_objective(const Decomposition& decomp, double alpha,
                                double mu);
double upper_bound_mu(const Decomposition& decomp, double alpha);

double upper_bound_mu_delta_objective(const Decomposition& decomp, double alpha,
                                      double delta, double mu);
double upper_bound_mu_delta(const Decomposition& decomp, double alpha);

double upper_bound_trace(const ChannelModel& model);
/// trace_norm is max_trace at A=1 for the model's alpha.
double upper_bound_trace_from_norm(const ChannelModel& model, double trace_norm);

/// Limit of C - n_R log A: 0.5 log(V_H^2/(2 pi e)^{n_R}), plus nu when the
/// average-power constraint is active.
double high_snr_asymptote(const Decomposition& decomp, double alpha);
double high_snr_asymptote_from_nu(const Decomposition& decomp, double alpha,
                                  double nu_val);

/// lim C/A^2 as A -> 0: half the max covariance trace at unit peak power.
double low_snr_slope(const ChannelModel& model);

struct BoundReport {
  double A_linear = 0.0;
  double A_dB = 0.0;
  double alpha_used = 0.0;
  // nats; quiet NaN when a bound does not apply at this alpha
  double lb_uniform = 0.0;
  double lb_exp = 0.0;
  double ub_peak = 0.0;
  double ub_mu = 0.0;
  double ub_mu_delta = 0.0;
  double ub_trace = 0.0;
  double nu = 0.0;
};

/// Per-alpha quantities that do not depend on the sweep amplitude.
struct AlphaCache {
  double alpha = 0.0;
  double alpha_used = 0.0;
  double nu_val = 0.0;  // NaN when alpha_used >= alpha_th
  double trace_norm = 0.0;
  bool below_threshold = false;
};

AlphaCache make_alpha_cache(const ChannelModel& model, double alpha,
                            int threads = 0);

BoundReport compute_bound_report(const ChannelModel& model,
                                 const AlphaCache& cache, double A);

}  // namespace mimocap

#endif
