#include "mimocap/decomposition.hpp"

#include <algorithm>
#include <cmath>

#include "mimocap/errors.hpp"

namespace mimocap {

namespace {

void next_subsets(int nt, int k, std::vector<std::vector<int>>& out) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == nt - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& H, const std::vector<int>& U) {
  Eigen::MatrixXd M(H.rows(), static_cast<Eigen::Index>(U.size()));
  for (size_t i = 0; i < U.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = H.col(U[i]);
  return M;
}

}  // namespace

std::vector<std::vector<int>> enumerate_bases(const ChannelModel& model,
                                              double tol_det) {
  if (!model.canonical())
    throw NoBasisError("enumerate_bases: model must be canonical");
  const int nt = model.nt();
  const int nr = model.nr();
  double max_col_norm = 0.0;
  for (int k = 0; k < nt; ++k)
    max_col_norm = std::max(max_col_norm, model.H.col(k).norm());
  const double cutoff = tol_det * std::pow(max_col_norm, nr);

  std::vector<std::vector<int>> subsets;
  next_subsets(nt, nr, subsets);
  std::vector<std::vector<int>> bases;
  for (const auto& U : subsets) {
    Eigen::MatrixXd HU = columns(model.H, U);
    if (std::abs(HU.determinant()) > cutoff) bases.push_back(U);
  }
  if (bases.empty()) throw NoBasisError("enumerate_bases: no nonsingular column subset");
  return bases;
}

Decomposition build_decomposition(const ChannelModel& model, double tol_det,
                                  double tol_tie) {
  const auto bases = enumerate_bases(model, tol_det);
  const int nt = model.nt();
  const int nr = model.nr();

  Decomposition dec;
  dec.A = model.A;
  dec.H = model.H;
  dec.cells.reserve(bases.size());

  for (const auto& U : bases) {
    BasisCell c;
    c.U = U;
    c.H_U = columns(model.H, U);
    c.H_U_inv = c.H_U.inverse();
    c.det_abs = std::abs(c.H_U.determinant());
    std::vector<bool> in_u(nt, false);
    for (int i : U) in_u[i] = true;
    for (int j = 0; j < nt; ++j)
      if (!in_u[j]) c.comp.push_back(j);
    for (int j : c.comp) {
      Eigen::VectorXd gam = c.H_U_inv * model.H.col(j);
      c.gamma.push_back(gam);
      c.a.push_back(gam.sum());
    }
    c.g.assign(c.comp.size(), 0);
    Eigen::MatrixXd gram = c.H_U_inv * c.H_U_inv.transpose();
    c.sigma = gram.diagonal().cwiseSqrt();
    dec.cells.push_back(std::move(c));
  }

  // tie detection is global: any a within tol of 1 switches every cell to the
  // tie-break path
  bool tie = false;
  for (const auto& c : dec.cells)
    for (double av : c.a)
      if (std::abs(av - 1.0) <= tol_tie) tie = true;
  dec.tie_path = tie;

  if (!tie) {
    for (auto& c : dec.cells)
      for (size_t t = 0; t < c.comp.size(); ++t) c.g[t] = (c.a[t] > 1.0) ? 1 : 0;
  } else {
    // Tie-break pass over (j, U) as published. For j in U the gamma vector is
    // H_U^{-1} h_j, a standard basis vector, so its first component is never
    // negative; the deterministic effect is that tied columns before min(U)
    // receive g=1 and tied columns after min(U) receive g=0.
    for (int j = 0; j < nt; ++j) {
      for (auto& c : dec.cells) {
        if (c.U.front() < j) continue;  // U not contained in {j..nt-1}
        auto pos = std::find(c.U.begin(), c.U.end(), j);
        if (pos == c.U.end()) {
          // j in complement of U
          auto ct = std::find(c.comp.begin(), c.comp.end(), j);
          size_t t = static_cast<size_t>(ct - c.comp.begin());
          c.g[t] = (c.a[t] >= 1.0 - tol_tie) ? 1 : 0;
        } else {
          Eigen::VectorXd gamma_j =
              c.H_U_inv * dec.H.col(j);  // j in U: a unit vector
          bool gamma_first_neg = gamma_j(0) < 0.0;
          for (size_t t = 0; t < c.comp.size(); ++t) {
            int k = c.comp[t];
            if (k <= j) continue;
            bool bigger = c.a[t] > 1.0 + tol_tie;
            bool tied = std::abs(c.a[t] - 1.0) <= tol_tie;
            c.g[t] = (bigger || (tied && gamma_first_neg)) ? 1 : 0;
          }
        }
      }
    }
  }

  double vh = 0.0;
  for (auto& c : dec.cells) vh += c.det_abs;
  dec.V_H = vh;
  double sq = 0.0;
  for (auto& c : dec.cells) {
    c.q = c.det_abs / vh;
    c.s = 0;
    c.v = Eigen::VectorXd::Zero(nr);
    for (size_t t = 0; t < c.comp.size(); ++t) {
      if (c.g[t]) {
        c.s += 1;
        c.v += model.A * model.H.col(c.comp[t]);
      }
    }
    sq += c.s * c.q;
  }
  dec.alpha_th = 0.5 * nr + sq;
  return dec;
}

namespace {

int locate_with_tol(const Decomposition& dec, const Eigen::VectorXd& xbar,
                    double tol) {
  const double A = dec.A;
  for (size_t ci = 0; ci < dec.cells.size(); ++ci) {
    const BasisCell& c = dec.cells[ci];
    Eigen::VectorXd beta = c.H_U_inv * (xbar - c.v);
    bool ok = true;
    for (int i = 0; i < beta.size(); ++i)
      if (beta(i) < -tol || beta(i) > A + tol) {
        ok = false;
        break;
      }
    if (ok) return static_cast<int>(ci);
  }
  return -1;
}

}  // namespace

int locate(const Decomposition& decomp, const Eigen::VectorXd& xbar) {
  int ci = locate_with_tol(decomp, xbar, kBoxTol);
  if (ci < 0) ci = locate_with_tol(decomp, xbar, kBoxTolLoose);
  if (ci < 0) throw OutsideZonotopeError("locate: point not covered by any cell");
  return ci;
}

MinEnergyResult min_energy_input(const Decomposition& decomp,
                                 const Eigen::VectorXd& xbar) {
  const int ci = locate(decomp, xbar);
  const BasisCell& c = decomp.cells[ci];
  const double A = decomp.A;

  Eigen::VectorXd beta = c.H_U_inv * (xbar - c.v);
  for (int i = 0; i < beta.size(); ++i) beta(i) = std::clamp(beta(i), 0.0, A);

  MinEnergyResult r;
  r.cell_index = ci;
  r.beta = beta;
  r.x_min = Eigen::VectorXd::Zero(decomp.nt());
  for (size_t i = 0; i < c.U.size(); ++i) r.x_min(c.U[i]) = beta(static_cast<Eigen::Index>(i));
  for (size_t t = 0; t < c.comp.size(); ++t)
    if (c.g[t]) r.x_min(c.comp[t]) = A;
  r.energy = A * c.s + beta.lpNorm<1>();
  return r;
}

}  // namespace mimocap
