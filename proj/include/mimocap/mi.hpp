#ifndef MIMOCAP_MI_HPP
#define MIMOCAP_MI_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mimocap/decomposition.hpp"
#include "mimocap/maxvar.hpp"

namespace mimocap {

struct MIEstimate {
  double value = 0.0;      // nats
  double std_error = 0.0;  // nats
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo estimate of I(Xbar; Xbar + Z) for a discrete Xbar in R^{n_R}
/// and standard Gaussian Z: h(Y) - h(Z) with the mixture density evaluated by
/// stabilized log-sum-exp. Sampling pairs the exact -log phi(Z) term with
/// each draw and uses antithetic noise, which leaves the mean untouched and
/// scales the error with the mutual information itself. Deterministic in the
/// seed. Probabilities below 1e-15 are dropped and renormalized.
MIEstimate mi_discrete_gaussian(const std::vector<Eigen::VectorXd>& points,
                                const Eigen::VectorXd& probs,
                                std::int64_t n_samples, std::uint64_t seed);

struct KPointResult {
  MIEstimate mi;
  DiscreteInput input;  // minimum-energy representatives, power-feasible
  bool budget_exhausted = false;
};

/// Best k-mass-point lower bound: multi-start Nelder-Mead over k-1 free input
/// vectors (one point pinned at 0) and their probabilities, with the
/// average-power constraint enforced by projecting mass onto the zero point.
/// Common random numbers across evaluations.
KPointResult k_point_lower_bound(const Decomposition& decomp, double alpha,
                                 int k, int budget, std::uint64_t seed,
                                 std::int64_t n_samples_search = 200000,
                                 std::int64_t n_samples_final = 2000000);

}  // namespace mimocap

#endif
