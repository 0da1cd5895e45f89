#ifndef MIMOCAP_MAXVAR_HPP
#define MIMOCAP_MAXVAR_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mimocap/channel.hpp"

namespace mimocap {

/// Finite input distribution on [0,A]^{n_T}.
struct DiscreteInput {
  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd probs;
};

/// Throws std::invalid_argument when probabilities or points violate the
/// declared invariants (sum to 1, distinct points, power budget).
void validate_discrete_input(const ChannelModel& model,
                             const DiscreteInput& input);

/// trace Cov(H X) for a discrete input, in squared amplitude units.
double trace_cov(const ChannelModel& model, const DiscreteInput& input);

struct TraceSolution {
  double value = 0.0;            // units A^2
  DiscreteInput input;           // binary chain support
  std::vector<int> ordering;     // antenna permutation (0-based)
  int support_size = 0;
  std::optional<bool> lemma5_support_ok;  // set when the rank check was run
};

struct RRankResult {
  bool holds = false;
  std::vector<int> witness_rows;          // empty when holds
  std::optional<Eigen::MatrixXd> witness;  // violating submatrix
  bool exhaustive = false;
};

/// Builds the (2^{n_T}-1) x (n_R+2) matrix of row tuples
/// (2 r_{V,1},...,2 r_{V,n_R}, |V|, ||r_V||^2).
Eigen::MatrixXd build_R_matrix(const ChannelModel& model);

/// Checks that every (n_R+2)-row submatrix has full rank; exhaustive for
/// n_T <= 5, seeded random sampling above.
RRankResult check_R_rank(const ChannelModel& model,
                         std::uint64_t sample_seed = 1,
                         int n_random_samples = 200000);

/// Concave QP over the n_T+1 chain prefixes of one antenna ordering.
TraceSolution max_trace_chain(const ChannelModel& model,
                              const std::vector<int>& ordering);

/// Best chain over all orderings (exhaustive for n_T <= 8, heuristic above).
TraceSolution max_trace(const ChannelModel& model, int threads = 0);

/// Oracle: away-step Frank-Wolfe over all 2^{n_T} binary points, no chain
/// assumption. Returns the optimal trace value.
double brute_force_max_trace(const ChannelModel& model);

}  // namespace mimocap

#endif
