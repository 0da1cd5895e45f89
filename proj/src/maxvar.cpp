#include "mimocap/maxvar.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <thread>

#include "mimocap/errors.hpp"
#include "mimocap/numutil.hpp"

namespace mimocap {

void validate_discrete_input(const ChannelModel& model,
                             const DiscreteInput& input) {
  const int n = static_cast<int>(input.points.size());
  if (n == 0 || input.probs.size() != n)
    throw std::invalid_argument("discrete input: size mismatch");
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (input.probs(k) < 0.0)
      throw std::invalid_argument("discrete input: negative probability");
    sum += input.probs(k);
    if (input.points[k].size() != model.nt())
      throw std::invalid_argument("discrete input: point dimension mismatch");
    for (int i = 0; i < model.nt(); ++i)
      if (input.points[k](i) < -1e-12 || input.points[k](i) > model.A + 1e-12)
        throw std::invalid_argument("discrete input: point outside [0,A]^nt");
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("discrete input: probabilities must sum to 1");
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l)
      if ((input.points[k] - input.points[l]).lpNorm<Eigen::Infinity>() < 1e-12)
        throw std::invalid_argument("discrete input: duplicate mass points");
  double pw = 0.0;
  for (int k = 0; k < n; ++k) pw += input.probs(k) * input.points[k].lpNorm<1>();
  if (pw > model.alpha * model.A + 1e-9)
    throw std::invalid_argument("discrete input: average power exceeds alpha*A");
}

double trace_cov(const ChannelModel& model, const DiscreteInput& input) {
  const int n = static_cast<int>(input.points.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.nr());
  double second = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd y = model.H * input.points[k];
    mean += input.probs(k) * y;
    second += input.probs(k) * y.squaredNorm();
  }
  return second - mean.squaredNorm();
}

Eigen::MatrixXd build_R_matrix(const ChannelModel& model) {
  const int nt = model.nt();
  const int nr = model.nr();
  if (nt > 12) throw TooLargeError("build_R_matrix: n_T > 12");
  const int T = (1 << nt) - 1;
  Eigen::MatrixXd R(T, nr + 2);
  for (int mask = 1; mask <= T; ++mask) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nr);
    int card = 0;
    for (int k = 0; k < nt; ++k)
      if (mask & (1 << k)) {
        r += model.H.col(k);
        ++card;
      }
    for (int i = 0; i < nr; ++i) R(mask - 1, i) = 2.0 * r(i);
    R(mask - 1, nr) = card;
    R(mask - 1, nr + 1) = r.squaredNorm();
  }
  return R;
}

namespace {

bool submatrix_full_rank(const Eigen::MatrixXd& R, const std::vector<int>& rows) {
  const int k = static_cast<int>(rows.size());
  Eigen::MatrixXd S(k, R.cols());
  for (int i = 0; i < k; ++i) S.row(i) = R.row(rows[i]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const auto& sv = svd.singularValues();
  return sv(0) > 0.0 && sv(sv.size() - 1) > 1e-10 * sv(0);
}

}  // namespace

RRankResult check_R_rank(const ChannelModel& model, std::uint64_t sample_seed,
                         int n_random_samples) {
  if (model.nr() < 2)
    throw std::invalid_argument("check_R_rank: model must be canonical with n_R >= 2");
  if (model.nt() > 12) throw TooLargeError("check_R_rank: n_T > 12");
  const Eigen::MatrixXd R = build_R_matrix(model);
  const int T = static_cast<int>(R.rows());
  const int k = model.nr() + 2;

  RRankResult res;
  res.holds = true;
  if (model.nt() <= 5) {
    res.exhaustive = true;
    std::vector<int> rows(k);
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      if (!submatrix_full_rank(R, idx)) {
        res.holds = false;
        res.witness_rows = idx;
        Eigen::MatrixXd W(k, R.cols());
        for (int i = 0; i < k; ++i) W.row(i) = R.row(idx[i]);
        res.witness = W;
        return res;
      }
      int i = k - 1;
      while (i >= 0 && idx[i] == T - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  } else {
    res.exhaustive = false;
    Rng rng(sample_seed);
    for (int trial = 0; trial < n_random_samples; ++trial) {
      std::vector<int> idx;
      while (static_cast<int>(idx.size()) < k) {
        int r = static_cast<int>(rng.uniform() * T);
        r = std::min(r, T - 1);
        if (std::find(idx.begin(), idx.end(), r) == idx.end()) idx.push_back(r);
      }
      std::sort(idx.begin(), idx.end());
      if (!submatrix_full_rank(R, idx)) {
        res.holds = false;
        res.witness_rows = idx;
        Eigen::MatrixXd W(k, R.cols());
        for (int i = 0; i < k; ++i) W.row(i) = R.row(idx[i]);
        res.witness = W;
        return res;
      }
    }
  }
  return res;
}

namespace {

// Concave chain QP:  maximize  sum_k p_k b_k - ||sum_k p_k r_k||^2
// over the simplex with sum_k p_k cost_k <= alpha.  Everything is in peak
// units (A = 1); the caller rescales by A^2.
struct ChainQp {
  std::vector<Eigen::VectorXd> r;  // K prefix images
  Eigen::VectorXd b;               // squared norms
  Eigen::VectorXd cost;            // prefix sizes
  double alpha;

  int K() const { return static_cast<int>(r.size()); }

  double value(const Eigen::VectorXd& p) const {
    Eigen::VectorXd m = mean(p);
    return b.dot(p) - m.squaredNorm();
  }

  Eigen::VectorXd mean(const Eigen::VectorXd& p) const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(r[0].size());
    for (int kk = 0; kk < K(); ++kk) m += p(kk) * r[kk];
    return m;
  }

  Eigen::VectorXd grad(const Eigen::VectorXd& p) const {
    Eigen::VectorXd m = mean(p);
    Eigen::VectorXd g(K());
    for (int kk = 0; kk < K(); ++kk) g(kk) = b(kk) - 2.0 * r[kk].dot(m);
    return g;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& y) const {
    std::vector<double> w(y.data(), y.data() + y.size());
    project_simplex(w);
    Eigen::VectorXd p = Eigen::Map<Eigen::VectorXd>(w.data(), y.size());
    if (cost.dot(p) <= alpha + 1e-14) return p;
    // bisect the multiplier on the power constraint
    auto at = [&](double t) {
      std::vector<double> z(y.size());
      for (int i = 0; i < y.size(); ++i) z[i] = y(i) - t * cost(i);
      project_simplex(z);
      return Eigen::Map<Eigen::VectorXd>(z.data(), y.size()).eval();
    };
    double thi = 1.0;
    while (cost.dot(at(thi)) > alpha && thi < 1e12) thi *= 2.0;
    double tlo = 0.0;
    for (int it = 0; it < 200; ++it) {
      double tm = 0.5 * (tlo + thi);
      if (cost.dot(at(tm)) > alpha)
        tlo = tm;
      else
        thi = tm;
    }
    return at(thi);
  }

  // exact maximizer of the quadratic along p + t (q - p), t in [0,1]
  double line_search(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const {
    Eigen::VectorXd d = q - p;
    Eigen::VectorXd rd = Eigen::VectorXd::Zero(r[0].size());
    for (int kk = 0; kk < K(); ++kk) rd += d(kk) * r[kk];
    double lin = b.dot(d) - 2.0 * mean(p).dot(rd);
    double quad = rd.squaredNorm();
    if (quad <= 0.0) return lin > 0.0 ? 1.0 : 0.0;
    return std::clamp(lin / (2.0 * quad), 0.0, 1.0);
  }

  struct Kkt {
    double residual;
    double eta;    // multiplier for sum p = 1
    double mu1;    // multiplier for power constraint, >= 0
  };

  double eval_candidate(const Eigen::VectorXd& p, const Eigen::VectorXd& g,
                        double eta, double mu1) const {
    double res = 0.0;
    for (int kk = 0; kk < K(); ++kk) {
      double slack = g(kk) - eta - mu1 * cost(kk);
      if (p(kk) > 1e-10)
        res = std::max(res, std::abs(slack));
      else
        res = std::max(res, std::max(0.0, slack));
    }
    res = std::max(res, std::abs(p.sum() - 1.0));
    res = std::max(res, std::max(0.0, cost.dot(p) - alpha));
    res = std::max(res, std::max(0.0, -mu1));
    res = std::max(res, std::abs(mu1 * (cost.dot(p) - alpha)));
    return res;
  }

  // The multiplier pair is not always identified by the support alone
  // (single-point or equal-cost supports); verify with the best of a small
  // family of exact candidates.
  Kkt kkt_residual(const Eigen::VectorXd& p) const {
    Eigen::VectorXd g = grad(p);
    std::vector<int> sup;
    for (int kk = 0; kk < K(); ++kk)
      if (p(kk) > 1e-10) sup.push_back(kk);
    if (sup.empty()) return {1.0, 0.0, 0.0};

    double gbar = 0.0, cbar = 0.0;
    for (int kk : sup) {
      gbar += g(kk);
      cbar += cost(kk);
    }
    gbar /= static_cast<double>(sup.size());
    cbar /= static_cast<double>(sup.size());

    std::vector<std::pair<double, double>> cands;  // (eta, mu1)
    cands.emplace_back(gbar, 0.0);
    if (sup.size() >= 2) {
      Eigen::MatrixXd M(sup.size(), 2);
      Eigen::VectorXd rhs(sup.size());
      for (size_t i = 0; i < sup.size(); ++i) {
        M(i, 0) = 1.0;
        M(i, 1) = cost(sup[i]);
        rhs(i) = g(sup[i]);
      }
      Eigen::Vector2d em = M.colPivHouseholderQr().solve(rhs);
      if (em(1) >= 0.0 && std::isfinite(em(0)) && std::isfinite(em(1)))
        cands.emplace_back(em(0), em(1));
    }
    // equal-cost supports leave mu1 free along eta = gbar - mu1*cbar
    for (int kk = 0; kk < K(); ++kk) {
      if (std::find(sup.begin(), sup.end(), kk) != sup.end()) continue;
      if (std::abs(cost(kk) - cbar) < 1e-15) continue;
      double mu1 = (g(kk) - gbar) / (cost(kk) - cbar);
      if (mu1 >= 0.0 && std::isfinite(mu1))
        cands.emplace_back(gbar - mu1 * cbar, mu1);
    }

    Kkt best{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (auto& [eta, mu1] : cands) {
      double r = eval_candidate(p, g, eta, mu1);
      if (r < best.residual) best = {r, eta, mu1};
    }
    return best;
  }

  // Stationary solve on a support set; the power constraint is added only
  // when the unconstrained-on-support optimum violates it.
  Eigen::VectorXd solve_on_support(const std::vector<int>& sup,
                                   bool with_power) const {
    const int ns = static_cast<int>(sup.size());
    const int ncon = with_power ? 2 : 1;
    Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(ns + ncon, ns + ncon);
    Eigen::VectorXd rhs(ns + ncon);
    for (int i = 0; i < ns; ++i) {
      for (int j = 0; j < ns; ++j)
        KKT(i, j) = 2.0 * r[sup[i]].dot(r[sup[j]]);
      KKT(i, ns) = 1.0;
      if (with_power) KKT(i, ns + 1) = cost(sup[i]);
      rhs(i) = b(sup[i]);
    }
    for (int i = 0; i < ns; ++i) {
      KKT(ns, i) = 1.0;
      if (with_power) KKT(ns + 1, i) = cost(sup[i]);
    }
    rhs(ns) = 1.0;
    if (with_power) rhs(ns + 1) = alpha;
    Eigen::VectorXd sol = KKT.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(K());
    for (int i = 0; i < ns; ++i) cand(sup[i]) = sol(i);
    return cand;
  }

  bool polish(Eigen::VectorXd& p) const {
    std::vector<int> sup;
    for (int kk = 0; kk < K(); ++kk)
      if (p(kk) > 1e-10) sup.push_back(kk);
    if (sup.empty()) return false;

    for (int round = 0; round < 4 * K() + 8; ++round) {
      Eigen::VectorXd cand = solve_on_support(sup, false);
      if (cost.dot(cand) > alpha + 1e-12) cand = solve_on_support(sup, true);

      // drop the most negative support entry, if any
      int worst = -1;
      double worst_v = -1e-12;
      for (size_t i = 0; i < sup.size(); ++i)
        if (cand(sup[i]) < worst_v) {
          worst_v = cand(sup[i]);
          worst = static_cast<int>(i);
        }
      if (worst >= 0) {
        sup.erase(sup.begin() + worst);
        if (sup.empty()) return false;
        continue;
      }

      Kkt kk = kkt_residual(cand);
      if (kk.residual <= 1e-10) {
        p = cand;
        return true;
      }
      // add the worst violating index and resolve
      Eigen::VectorXd g = grad(cand);
      int add = -1;
      double add_v = 1e-10;
      for (int t2 = 0; t2 < K(); ++t2) {
        if (std::find(sup.begin(), sup.end(), t2) != sup.end()) continue;
        double slack = g(t2) - kk.eta - kk.mu1 * cost(t2);
        if (slack > add_v) {
          add_v = slack;
          add = t2;
        }
      }
      if (add < 0) {
        p = cand;  // residual driven by round-off only
        return true;
      }
      sup.push_back(add);
      std::sort(sup.begin(), sup.end());
    }
    return false;
  }
};

TraceSolution solve_chain(const ChannelModel& model,
                          const std::vector<int>& ordering) {
  const int nt = model.nt();
  ChainQp qp;
  qp.alpha = std::min(model.alpha, 0.5 * nt);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.nr());
  qp.r.push_back(acc);
  for (int k = 0; k < nt; ++k) {
    acc += model.H.col(ordering[k]);
    qp.r.push_back(acc);
  }
  const int K = qp.K();
  qp.b.resize(K);
  qp.cost.resize(K);
  for (int k = 0; k < K; ++k) {
    qp.b(k) = qp.r[k].squaredNorm();
    qp.cost(k) = k;
  }

  double L = 0.0;
  for (int k = 0; k < K; ++k) L += 2.0 * qp.b(k);
  L = std::max(L, 1e-12);

  Eigen::VectorXd p = Eigen::VectorXd::Zero(K);
  p(0) = 1.0;
  const int cap = 100000;
  bool converged = false;
  for (int it = 0; it < cap; ++it) {
    Eigen::VectorXd g = qp.grad(p);
    Eigen::VectorXd q = qp.project(p + (1.0 / L) * g);
    double step = qp.line_search(p, q);
    Eigen::VectorXd pn = p + step * (q - p);
    double move = (pn - p).lpNorm<Eigen::Infinity>();
    p = pn;
    if (it % 32 == 31 || move < 1e-13) {
      if (qp.polish(p) && qp.kkt_residual(p).residual <= 1e-10) {
        converged = true;
        break;
      }
      if (move < 1e-13 && qp.kkt_residual(p).residual <= 1e-10) {
        converged = true;
        break;
      }
    }
  }
  if (!converged && qp.kkt_residual(p).residual > 1e-10)
    throw NonConvergenceError("max_trace_chain: KKT residual above 1e-10");

  TraceSolution sol;
  sol.value = model.A * model.A * qp.value(p);
  sol.ordering = ordering;
  std::vector<int> sup;
  for (int k = 0; k < K; ++k)
    if (p(k) > 1e-10) sup.push_back(k);
  sol.support_size = static_cast<int>(sup.size());
  sol.input.probs.resize(sup.size());
  double renorm = 0.0;
  for (int k : sup) renorm += p(k);
  for (size_t i = 0; i < sup.size(); ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(nt);
    for (int t = 0; t < sup[i]; ++t) x(ordering[t]) = model.A;
    sol.input.points.push_back(x);
    sol.input.probs(i) = p(sup[i]) / renorm;
  }
  return sol;
}

}  // namespace

TraceSolution max_trace_chain(const ChannelModel& model,
                              const std::vector<int>& ordering) {
  const int nt = model.nt();
  std::vector<int> chk(ordering);
  std::sort(chk.begin(), chk.end());
  for (int i = 0; i < nt; ++i)
    if (i >= static_cast<int>(chk.size()) || chk[i] != i)
      throw std::invalid_argument("max_trace_chain: not a permutation of 0..n_T-1");
  return solve_chain(model, ordering);
}

TraceSolution max_trace(const ChannelModel& model, int threads) {
  const int nt = model.nt();
  std::vector<std::vector<int>> orderings;
  if (nt <= 8) {
    std::vector<int> perm(nt);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      orderings.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    // heuristic: column-norm descent plus seeded shuffles with 2-opt passes
    std::vector<int> base(nt);
    std::iota(base.begin(), base.end(), 0);
    std::stable_sort(base.begin(), base.end(), [&](int a, int b) {
      return model.H.col(a).norm() > model.H.col(b).norm();
    });
    orderings.push_back(base);
    Rng rng(2024);
    for (int rep = 0; rep < 64; ++rep) {
      std::vector<int> perm(base);
      for (int i = nt - 1; i > 0; --i) {
        int j = static_cast<int>(rng.uniform() * (i + 1));
        std::swap(perm[i], perm[std::min(j, i)]);
      }
      orderings.push_back(perm);
    }
  }

  int nthreads = threads > 0 ? threads
                             : static_cast<int>(std::min<size_t>(
                                   std::thread::hardware_concurrency(),
                                   orderings.size()));
  nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(orderings.size())));

  auto run_range = [&](size_t lo, size_t hi) {
    TraceSolution best;
    best.value = -1.0;
    for (size_t i = lo; i < hi; ++i) {
      TraceSolution s = solve_chain(model, orderings[i]);
      if (s.value > best.value) best = std::move(s);
    }
    return best;
  };

  TraceSolution best;
  best.value = -1.0;
  if (nthreads <= 1) {
    best = run_range(0, orderings.size());
  } else {
    std::vector<std::future<TraceSolution>> futs;
    size_t chunk = (orderings.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      size_t lo = t * chunk;
      size_t hi = std::min(orderings.size(), lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, run_range, lo, hi));
    }
    for (auto& f : futs) {
      TraceSolution s = f.get();
      if (s.value > best.value) best = std::move(s);
    }
  }

  if (nt <= 8) {
    // 2-opt refinement pass is unnecessary for exhaustive search
  } else {
    bool improved = true;
    while (improved) {
      improved = false;
      std::vector<int> cur = best.ordering;
      for (int i = 0; i < nt && !improved; ++i)
        for (int j = i + 1; j < nt && !improved; ++j) {
          std::vector<int> perm(cur);
          std::swap(perm[i], perm[j]);
          TraceSolution s = solve_chain(model, perm);
          if (s.value > best.value + 1e-12) {
            best = std::move(s);
            improved = true;
          }
        }
    }
  }

  if (nt <= 5 && model.nr() >= 2) {
    RRankResult rr = check_R_rank(model);
    if (rr.holds)
      best.lemma5_support_ok = (best.support_size <= model.nr() + 2);
  }
  return best;
}

double brute_force_max_trace(const ChannelModel& model) {
  const int nt = model.nt();
  if (nt > 10) throw TooLargeError("brute_force_max_trace: n_T > 10");
  const int T = 1 << nt;
  const double alpha = std::min(model.alpha, 0.5 * nt);

  std::vector<Eigen::VectorXd> r(T);
  Eigen::VectorXd b(T), cost(T);
  for (int mask = 0; mask < T; ++mask) {
    Eigen::VectorXd rv = Eigen::VectorXd::Zero(model.nr());
    int card = 0;
    for (int k = 0; k < nt; ++k)
      if (mask & (1 << k)) {
        rv += model.H.col(k);
        ++card;
      }
    r[mask] = rv;
    b(mask) = rv.squaredNorm();
    cost(mask) = card;
  }

  // atoms are extreme points of {p in simplex : cost'p <= alpha}: singletons
  // with cost <= alpha, or two-point mixtures meeting alpha exactly
  struct Atom {
    int i = 0, j = -1;
    double wi = 1.0, wj = 0.0;
  };
  auto atom_vec = [&](const Atom& a) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(T);
    v(a.i) += a.wi;
    if (a.j >= 0) v(a.j) += a.wj;
    return v;
  };

  auto lmo = [&](const Eigen::VectorXd& g) {
    // best mask per cardinality class
    std::vector<int> best_by_card(nt + 1, -1);
    for (int mask = 0; mask < T; ++mask) {
      int card = static_cast<int>(cost(mask));
      if (best_by_card[card] < 0 || g(mask) > g(best_by_card[card]))
        best_by_card[card] = mask;
    }
    Atom best;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int c1 = 0; c1 <= nt; ++c1) {
      if (best_by_card[c1] < 0) continue;
      if (c1 <= alpha + 1e-12) {
        double v = g(best_by_card[c1]);
        if (v > best_v) {
          best_v = v;
          best = {best_by_card[c1], -1, 1.0, 0.0};
        }
      }
      for (int c2 = c1 + 1; c2 <= nt; ++c2) {
        if (best_by_card[c2] < 0) continue;
        if (c1 <= alpha && c2 > alpha) {
          double th = (alpha - c1) / static_cast<double>(c2 - c1);
          double v = (1.0 - th) * g(best_by_card[c1]) + th * g(best_by_card[c2]);
          if (v > best_v) {
            best_v = v;
            best = {best_by_card[c1], best_by_card[c2], 1.0 - th, th};
          }
        }
      }
    }
    return best;
  };

  auto value = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(model.nr());
    for (int mask = 0; mask < T; ++mask)
      if (p(mask) != 0.0) m += p(mask) * r[mask];
    return b.dot(p) - m.squaredNorm();
  };
  auto gradf = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(model.nr());
    for (int mask = 0; mask < T; ++mask)
      if (p(mask) != 0.0) m += p(mask) * r[mask];
    Eigen::VectorXd g(T);
    for (int mask = 0; mask < T; ++mask) g(mask) = b(mask) - 2.0 * r[mask].dot(m);
    return g;
  };

  std::vector<std::pair<Atom, double>> active;  // atom, weight
  active.push_back({Atom{0, -1, 1.0, 0.0}, 1.0});
  Eigen::VectorXd p = Eigen::VectorXd::Zero(T);
  p(0) = 1.0;

  const int cap = 100000;
  for (int it = 0; it < cap; ++it) {
    Eigen::VectorXd g = gradf(p);
    Atom fw = lmo(g);
    Eigen::VectorXd svec = atom_vec(fw);
    double gap = g.dot(svec - p);
    if (gap <= 1e-9) return model.A * model.A * value(p);

    // away atom: active atom with smallest gradient
    int away_idx = -1;
    double away_v = std::numeric_limits<double>::infinity();
    for (size_t ai = 0; ai < active.size(); ++ai) {
      double v = g.dot(atom_vec(active[ai].first));
      if (v < away_v) {
        away_v = v;
        away_idx = static_cast<int>(ai);
      }
    }

    bool do_away = false;
    Eigen::VectorXd d;
    double gamma_max = 1.0;
    if (away_idx >= 0) {
      Eigen::VectorXd avec = atom_vec(active[away_idx].first);
      double away_gap = g.dot(p - avec);
      if (away_gap > gap && active[away_idx].second < 1.0) {
        do_away = true;
        d = p - avec;
        gamma_max = active[away_idx].second / (1.0 - active[away_idx].second);
      }
    }
    if (!do_away) d = svec - p;

    // exact step for the quadratic objective
    Eigen::VectorXd rd = Eigen::VectorXd::Zero(model.nr());
    for (int mask = 0; mask < T; ++mask)
      if (d(mask) != 0.0) rd += d(mask) * r[mask];
    double lin = g.dot(d);
    double quad = rd.squaredNorm();
    double gamma = (quad > 0.0) ? std::clamp(lin / (2.0 * quad), 0.0, gamma_max)
                                : gamma_max;

    p += gamma * d;
    if (do_away) {
      for (auto& aw : active) aw.second *= (1.0 + gamma);
      active[away_idx].second -= gamma;
      if (active[away_idx].second < 1e-14)
        active.erase(active.begin() + away_idx);
    } else {
      for (auto& aw : active) aw.second *= (1.0 - gamma);
      bool found = false;
      for (auto& aw : active)
        if (aw.first.i == fw.i && aw.first.j == fw.j &&
            std::abs(aw.first.wi - fw.wi) < 1e-15) {
          aw.second += gamma;
          found = true;
          break;
        }
      if (!found && gamma > 0.0) active.push_back({fw, gamma});
      if (gamma >= 1.0) {
        active.clear();
        active.push_back({fw, 1.0});
      }
    }
  }
  throw NonConvergenceError("brute_force_max_trace: duality gap above 1e-9");
}

}  // namespace mimocap
