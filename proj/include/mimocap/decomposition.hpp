#ifndef MIMOCAP_DECOMPOSITION_HPP
#define MIMOCAP_DECOMPOSITION_HPP

#include <Eigen/Dense>
#include <vector>

#include "mimocap/channel.hpp"

namespace mimocap {

/// One parallelepiped of the minimum-energy tiling: a set U of n_R
/// independent columns, its offset v = A * sum of the g=1 columns outside U,
/// and the derived per-cell quantities used by the capacity bounds.
struct BasisCell {
  std::vector<int> U;       // sorted, 0-based column indices, |U| = n_R
  std::vector<int> comp;    // complement of U, sorted
  Eigen::MatrixXd H_U;      // n_R x n_R
  Eigen::MatrixXd H_U_inv;
  double det_abs = 0.0;     // |det H_U|
  std::vector<Eigen::VectorXd> gamma;  // per comp entry: H_U^{-1} h_j
  std::vector<double> a;               // component sums of gamma
  std::vector<int> g;                  // 0/1 per comp entry
  Eigen::VectorXd v;        // offset, length n_R
  int s = 0;                // number of g=1 entries
  double q = 0.0;           // det_abs / V_H
  Eigen::VectorXd sigma;    // sqrt(diag(H_U^{-1} H_U^{-T})), length n_R
};

struct Decomposition {
  std::vector<BasisCell> cells;  // lexicographic in U
  double V_H = 0.0;              // sum of |det H_U|
  double alpha_th = 0.0;         // n_R/2 + sum s_U q_U
  double A = 1.0;
  Eigen::MatrixXd H;
  bool tie_path = false;  // Algorithm-1 tie break was required

  int nt() const { return static_cast<int>(H.cols()); }
  int nr() const { return static_cast<int>(H.rows()); }
};

struct MinEnergyResult {
  Eigen::VectorXd x_min;  // length n_T, in [0,A]
  int cell_index = -1;
  Eigen::VectorXd beta;   // length n_R
  double energy = 0.0;    // ||x_min||_1 = A*s_U + ||beta||_1
};

inline constexpr double kDetTol = 1e-10;  // relative, scaled by column norms
inline constexpr double kTieTol = 1e-9;   // |a - 1| below this is a tie
inline constexpr double kBoxTol = 1e-9;   // cell membership slack
inline constexpr double kBoxTolLoose = 1e-6;

/// All size-n_R column subsets with nonsingular submatrix, lexicographic.
std::vector<std::vector<int>> enumerate_bases(const ChannelModel& model,
                                              double tol_det = kDetTol);

Decomposition build_decomposition(const ChannelModel& model,
                                  double tol_det = kDetTol,
                                  double tol_tie = kTieTol);

/// First cell (lexicographic) whose beta-box contains xbar.
/// Throws OutsideZonotopeError.
int locate(const Decomposition& decomp, const Eigen::VectorXd& xbar);

MinEnergyResult min_energy_input(const Decomposition& decomp,
                                 const Eigen::VectorXd& xbar);

}  // namespace mimocap

#endif
