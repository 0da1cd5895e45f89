#ifndef MIMOCAP_LINPROG_HPP
#define MIMOCAP_LINPROG_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "mimocap/channel.hpp"

namespace mimocap {

struct LpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// min c'x  s.t.  Aeq x = b,  0 <= x <= u.   Two-phase simplex with bounded
/// variables and Bland's rule. Throws InfeasibleError.
LpResult lp_solve_box(const Eigen::MatrixXd& Aeq, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c, const Eigen::VectorXd& u);

/// Phase 1 only: is {x in [0,u] : Aeq x = b} nonempty?
bool lp_feasible_box(const Eigen::MatrixXd& Aeq, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& u);

/// Independent oracle for the minimum-energy preimage:
/// min ||x||_1 s.t. Hx = xbar, 0 <= x <= A. Infeasible iff xbar outside the
/// zonotope.
LpResult lp_oracle_min_energy(const ChannelModel& model,
                              const Eigen::VectorXd& xbar);

struct VolumeEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
};

/// Hit-or-miss estimate of vol(R(H)) against the coordinate bounding box;
/// membership decided by LP feasibility, independent of the tiling code.
VolumeEstimate zonotope_volume_mc(const ChannelModel& model,
                                  std::int64_t n_samples, std::uint64_t seed);

}  // namespace mimocap

#endif
