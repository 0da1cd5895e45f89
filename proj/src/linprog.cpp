#include "mimocap/linprog.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mimocap/errors.hpp"
#include "mimocap/numutil.hpp"

namespace mimocap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarStatus { Basic, AtLower, AtUpper };

// Dense simplex for min c'x, Ax = b, 0 <= x <= u, with bounded nonbasic
// variables. The basis inverse is recomputed each pivot; row counts here are
// tiny (n_R, or n_R + n_T for the extended forms) so this is far cheaper than
// it looks.
class BoundedSimplex {
 public:
  BoundedSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                 const Eigen::VectorXd& u)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
    // flip rows so b >= 0, then append one artificial per row
    A_.resize(m_, n_ + m_);
    b_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      double sgn = (b(i) < 0.0) ? -1.0 : 1.0;
      A_.row(i).head(n_) = sgn * A.row(i);
      b_(i) = sgn * b(i);
    }
    A_.rightCols(m_) = Eigen::MatrixXd::Identity(m_, m_);
    u_.resize(n_ + m_);
    u_.head(n_) = u;
    u_.tail(m_).setConstant(kInf);
    status_.assign(n_ + m_, VarStatus::AtLower);
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      status_[n_ + i] = VarStatus::Basic;
    }
    scale_ = std::max(1.0, std::max(A.cwiseAbs().maxCoeff(),
                                    b.cwiseAbs().maxCoeff()));
    tol_ = 1e-10 * scale_;
  }

  // returns phase-1 infeasibility residual
  double phase1() {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_ + m_);
    c.tail(m_).setOnes();
    run(c);
    return objective(c);
  }

  // pin artificials at zero, then optimize the real objective
  void phase2(const Eigen::VectorXd& c_real) {
    for (int i = 0; i < m_; ++i) u_(n_ + i) = 0.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_ + m_);
    c.head(n_) = c_real;
    run(c);
    c2_ = c;
  }

  Eigen::VectorXd solution() const { return values().head(n_); }

  double objective(const Eigen::VectorXd& c) const { return c.dot(values()); }
  double objective2() const { return objective(c2_); }

 private:
  Eigen::VectorXd values() const {
    Eigen::VectorXd x(n_ + m_);
    for (int j = 0; j < n_ + m_; ++j)
      x(j) = (status_[j] == VarStatus::AtUpper) ? u_(j) : 0.0;
    Eigen::VectorXd rhs = b_;
    for (int j = 0; j < n_ + m_; ++j)
      if (status_[j] != VarStatus::Basic && x(j) != 0.0) rhs -= A_.col(j) * x(j);
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = A_.col(basis_[i]);
    Eigen::VectorXd xb = B.partialPivLu().solve(rhs);
    for (int i = 0; i < m_; ++i) x(basis_[i]) = xb(i);
    return x;
  }

  void run(const Eigen::VectorXd& c) {
    const int max_iter = 20000;
    for (int iter = 0; iter < max_iter; ++iter) {
      Eigen::MatrixXd B(m_, m_);
      for (int i = 0; i < m_; ++i) B.col(i) = A_.col(basis_[i]);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);

      Eigen::VectorXd xall(n_ + m_);
      for (int j = 0; j < n_ + m_; ++j)
        xall(j) = (status_[j] == VarStatus::AtUpper) ? u_(j) : 0.0;
      Eigen::VectorXd rhs = b_;
      for (int j = 0; j < n_ + m_; ++j)
        if (status_[j] != VarStatus::Basic && xall(j) != 0.0)
          rhs -= A_.col(j) * xall(j);
      Eigen::VectorXd xb = lu.solve(rhs);

      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb(i) = c(basis_[i]);
      Eigen::VectorXd y = lu.transpose().solve(cb);

      // Bland: smallest eligible index
      int enter = -1;
      bool enter_from_lower = true;
      for (int j = 0; j < n_ + m_; ++j) {
        if (status_[j] == VarStatus::Basic) continue;
        double zj = c(j) - y.dot(A_.col(j));
        if (status_[j] == VarStatus::AtLower && zj < -tol_ && u_(j) > 0.0) {
          enter = j;
          enter_from_lower = true;
          break;
        }
        if (status_[j] == VarStatus::AtUpper && zj > tol_) {
          enter = j;
          enter_from_lower = false;
          break;
        }
      }
      if (enter < 0) return;  // optimal

      Eigen::VectorXd w = lu.solve(A_.col(enter));
      // entering moves by t; basic values change by -dir * t * w
      double dir = enter_from_lower ? 1.0 : -1.0;
      double tmax = u_(enter);  // bound-to-bound flip
      int leave_row = -1;
      for (int i = 0; i < m_; ++i) {
        double delta = -dir * w(i);
        if (delta < -1e-13 * scale_) {
          // basic value decreasing toward 0
          double t = xb(i) / (-delta);
          if (t < tmax - 1e-15) {
            tmax = t;
            leave_row = i;
          } else if (t <= tmax + 1e-15 && leave_row >= 0 &&
                     basis_[i] < basis_[leave_row]) {
            leave_row = i;
          }
        } else if (delta > 1e-13 * scale_ && std::isfinite(u_(basis_[i]))) {
          // basic value increasing toward its upper bound
          double t = (u_(basis_[i]) - xb(i)) / delta;
          if (t < tmax - 1e-15) {
            tmax = t;
            leave_row = i;
          } else if (t <= tmax + 1e-15 && leave_row >= 0 &&
                     basis_[i] < basis_[leave_row]) {
            leave_row = i;
          }
        }
      }
      if (!std::isfinite(tmax))
        throw NonConvergenceError("simplex: unbounded direction");
      if (tmax < 0.0) tmax = 0.0;

      if (leave_row < 0) {
        // entering variable flips to its other bound
        status_[enter] =
            enter_from_lower ? VarStatus::AtUpper : VarStatus::AtLower;
        continue;
      }
      int leave = basis_[leave_row];
      double delta = -dir * w(leave_row);
      status_[leave] =
          (delta < 0.0) ? VarStatus::AtLower : VarStatus::AtUpper;
      basis_[leave_row] = enter;
      status_[enter] = VarStatus::Basic;
    }
    throw NonConvergenceError("simplex: iteration cap reached");
  }

  int m_, n_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_, u_, c2_;
  std::vector<VarStatus> status_;
  std::vector<int> basis_;
  double scale_ = 1.0, tol_ = 1e-10;
};

}  // namespace

LpResult lp_solve_box(const Eigen::MatrixXd& Aeq, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c, const Eigen::VectorXd& u) {
  BoundedSimplex sx(Aeq, b, u);
  double res = sx.phase1();
  double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (res > 1e-8 * scale) throw InfeasibleError("lp_solve_box: infeasible");
  sx.phase2(c);
  LpResult r;
  r.x = sx.solution();
  r.objective = c.dot(r.x);
  return r;
}

bool lp_feasible_box(const Eigen::MatrixXd& Aeq, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& u) {
  BoundedSimplex sx(Aeq, b, u);
  double res = sx.phase1();
  double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return res <= 1e-8 * scale;
}

LpResult lp_oracle_min_energy(const ChannelModel& model,
                              const Eigen::VectorXd& xbar) {
  if (!xbar.allFinite())
    throw std::invalid_argument("lp_oracle_min_energy: xbar must be finite");
  const int nt = model.nt();
  Eigen::VectorXd c = Eigen::VectorXd::Ones(nt);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(nt, model.A);
  return lp_solve_box(model.H, xbar, c, u);
}

VolumeEstimate zonotope_volume_mc(const ChannelModel& model,
                                  std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 10000)
    throw std::invalid_argument("zonotope_volume_mc: need at least 1e4 samples");
  const int nr = model.nr();
  const int nt = model.nt();
  Eigen::VectorXd lo(nr), hi(nr);
  for (int i = 0; i < nr; ++i) {
    double l = 0.0, h = 0.0;
    for (int k = 0; k < nt; ++k) {
      l += std::min(model.H(i, k), 0.0);
      h += std::max(model.H(i, k), 0.0);
    }
    lo(i) = model.A * l;
    hi(i) = model.A * h;
  }
  double box_vol = 1.0;
  for (int i = 0; i < nr; ++i) box_vol *= (hi(i) - lo(i));

  Eigen::VectorXd u = Eigen::VectorXd::Constant(nt, model.A);
  Rng rng(seed);
  std::int64_t hits = 0;
  Eigen::VectorXd pt(nr);
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (int i = 0; i < nr; ++i) pt(i) = lo(i) + (hi(i) - lo(i)) * rng.uniform();
    if (lp_feasible_box(model.H, pt, u)) ++hits;
  }
  double p = static_cast<double>(hits) / static_cast<double>(n_samples);
  VolumeEstimate ve;
  ve.estimate = box_vol * p;
  ve.std_error = box_vol * std::sqrt(std::max(p * (1.0 - p), 0.0) /
                                     static_cast<double>(n_samples));
  ve.n_samples = n_samples;
  return ve;
}

}  // namespace mimocap
