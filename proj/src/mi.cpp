#include "mimocap/mi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mimocap/errors.hpp"
#include "mimocap/numutil.hpp"

namespace mimocap {

MIEstimate mi_discrete_gaussian(const std::vector<Eigen::VectorXd>& points,
                                const Eigen::VectorXd& probs,
                                std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 10000)
    throw std::invalid_argument("mi_discrete_gaussian: need at least 1e4 samples");
  if (points.empty() || probs.size() != static_cast<int>(points.size()))
    throw std::invalid_argument("mi_discrete_gaussian: pmf size mismatch");

  // drop negligible components
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ps;
  for (int j = 0; j < probs.size(); ++j) {
    if (probs(j) < 0.0)
      throw std::invalid_argument("mi_discrete_gaussian: negative probability");
    if (probs(j) >= 1e-15) {
      xs.push_back(points[j]);
      ps.push_back(probs(j));
    }
  }
  if (xs.empty())
    throw std::invalid_argument("mi_discrete_gaussian: degenerate pmf");
  double psum = std::accumulate(ps.begin(), ps.end(), 0.0);
  for (double& p : ps) p /= psum;

  const int m = static_cast<int>(xs.size());
  const int nr = static_cast<int>(xs[0].size());
  std::vector<double> logp(m), cum(m);
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    logp[j] = std::log(ps[j]);
    acc += ps[j];
    cum[j] = acc;
  }
  cum[m - 1] = 1.0;

  Rng rng(seed);
  const std::int64_t n_pairs = std::max<std::int64_t>(1, n_samples / 2);
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> z(nr), terms(m);

  auto integrand = [&](int k, double zsign) {
    // log phi(Z) - log f(x_k + Z), with the (nr/2) log(2 pi) cancelling
    double z2 = 0.0;
    for (int i = 0; i < nr; ++i) z2 += z[i] * z[i];
    for (int j = 0; j < m; ++j) {
      double d2 = 0.0;
      for (int i = 0; i < nr; ++i) {
        double d = xs[k](i) + zsign * z[i] - xs[j](i);
        d2 += d * d;
      }
      terms[j] = logp[j] - 0.5 * d2;
    }
    return -0.5 * z2 - log_sum_exp(terms);
  };

  for (std::int64_t t = 0; t < n_pairs; ++t) {
    int k = rng.categorical(cum);
    for (int i = 0; i < nr; ++i) z[i] = rng.normal();
    double v = 0.5 * (integrand(k, 1.0) + integrand(k, -1.0));
    sum += v;
    sumsq += v * v;
  }
  const double np = static_cast<double>(n_pairs);
  double mean = sum / np;
  double var = std::max(0.0, (sumsq - np * mean * mean) / std::max(1.0, np - 1.0));

  MIEstimate est;
  est.value = mean;
  est.std_error = std::sqrt(var / np);
  est.n_samples = 2 * n_pairs;
  est.seed = seed;
  return est;
}

namespace {

struct KPointProblem {
  const Decomposition* dec;
  double alpha;
  int k;
  std::int64_t n_samples;
  std::uint64_t crn_seed;

  int nt() const { return dec->nt(); }
  int dim() const { return (k - 1) * (nt() + 1); }

  // decode parameters into image-space points and a power-feasible pmf
  void decode(const Eigen::VectorXd& th, std::vector<Eigen::VectorXd>& xbars,
              Eigen::VectorXd& probs,
              std::vector<Eigen::VectorXd>* xraw = nullptr) const {
    const double A = dec->A;
    const int n = nt();
    xbars.assign(1, Eigen::VectorXd::Zero(dec->nr()));
    if (xraw) xraw->assign(1, Eigen::VectorXd::Zero(n));
    Eigen::VectorXd w(k - 1);
    for (int j = 0; j < k - 1; ++j) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i)
        x(i) = std::clamp(th(j * (n + 1) + i), 0.0, A);
      xbars.push_back(dec->H * x);
      if (xraw) xraw->push_back(x);
      w(j) = std::clamp(th(j * (n + 1) + n), -30.0, 30.0);
    }
    probs.resize(k);
    double denom = 1.0;
    for (int j = 0; j < k - 1; ++j) denom += std::exp(w(j));
    probs(0) = 1.0 / denom;
    for (int j = 0; j < k - 1; ++j) probs(j + 1) = std::exp(w(j)) / denom;

    // project onto the power budget by moving mass to the zero point
    double cost = 0.0;
    for (int j = 1; j < k; ++j)
      cost += probs(j) * min_energy_input(*dec, xbars[j]).energy;
    const double budget = alpha * A;
    if (cost > budget && cost > 0.0) {
      double t = budget / cost;
      double moved = 0.0;
      for (int j = 1; j < k; ++j) {
        moved += probs(j) * (1.0 - t);
        probs(j) *= t;
      }
      probs(0) += moved;
    }
  }

  double eval(const Eigen::VectorXd& th) const {
    std::vector<Eigen::VectorXd> xbars;
    Eigen::VectorXd probs;
    decode(th, xbars, probs);
    return -mi_discrete_gaussian(xbars, probs, n_samples, crn_seed).value;
  }
};

// standard Nelder-Mead, minimization, bounded by evaluation count
double nelder_mead(const KPointProblem& prob, Eigen::VectorXd& th, int max_evals,
                   int* evals_used) {
  const int d = static_cast<int>(th.size());
  std::vector<Eigen::VectorXd> vx(d + 1, th);
  std::vector<double> vf(d + 1);
  const double A = prob.dec->A;
  const int n = prob.nt();
  for (int j = 1; j <= d; ++j) {
    int coord = j - 1;
    bool is_weight = (coord % (n + 1)) == n;
    vx[j](coord) += is_weight ? 0.5 : 0.25 * A;
  }
  int evals = 0;
  for (int j = 0; j <= d; ++j) {
    vf[j] = prob.eval(vx[j]);
    ++evals;
  }
  auto order = [&]() {
    std::vector<int> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vf[a] < vf[b]; });
    std::vector<Eigen::VectorXd> nvx(d + 1);
    std::vector<double> nvf(d + 1);
    for (int j = 0; j <= d; ++j) {
      nvx[j] = vx[idx[j]];
      nvf[j] = vf[idx[j]];
    }
    vx.swap(nvx);
    vf.swap(nvf);
  };
  order();
  while (evals < max_evals) {
    if (std::abs(vf[d] - vf[0]) < 1e-9 * (1.0 + std::abs(vf[0]))) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) centroid += vx[j];
    centroid /= d;
    Eigen::VectorXd xr = centroid + (centroid - vx[d]);
    double fr = prob.eval(xr);
    ++evals;
    if (fr < vf[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - vx[d]);
      double fe = prob.eval(xe);
      ++evals;
      if (fe < fr) {
        vx[d] = xe;
        vf[d] = fe;
      } else {
        vx[d] = xr;
        vf[d] = fr;
      }
    } else if (fr < vf[d - 1]) {
      vx[d] = xr;
      vf[d] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (vx[d] - centroid);
      double fc = prob.eval(xc);
      ++evals;
      if (fc < vf[d]) {
        vx[d] = xc;
        vf[d] = fc;
      } else {
        for (int j = 1; j <= d; ++j) {
          vx[j] = vx[0] + 0.5 * (vx[j] - vx[0]);
          vf[j] = prob.eval(vx[j]);
          ++evals;
          if (evals >= max_evals) break;
        }
      }
    }
    order();
  }
  th = vx[0];
  *evals_used = evals;
  return vf[0];
}

}  // namespace

KPointResult k_point_lower_bound(const Decomposition& decomp, double alpha,
                                 int k, int budget, std::uint64_t seed,
                                 std::int64_t n_samples_search,
                                 std::int64_t n_samples_final) {
  if (k < 2 || k > 4)
    throw std::invalid_argument("k_point_lower_bound: k must be 2, 3 or 4");
  if (alpha <= 0.0)
    throw InfeasibleError("k_point_lower_bound: alpha must be positive");

  KPointProblem prob;
  prob.dec = &decomp;
  prob.alpha = alpha;
  prob.k = k;
  prob.n_samples = n_samples_search;
  prob.crn_seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;

  const int n = decomp.nt();
  const double A = decomp.A;
  const int d = prob.dim();
  const int n_starts = 8;
  const int evals_per_start = std::max(1, budget / n_starts);

  // norm-descending antenna order for the structured starts
  std::vector<int> by_norm(n);
  std::iota(by_norm.begin(), by_norm.end(), 0);
  std::stable_sort(by_norm.begin(), by_norm.end(), [&](int a, int b) {
    return decomp.H.col(a).norm() > decomp.H.col(b).norm();
  });

  Rng rng(seed);
  Eigen::VectorXd best_th;
  double best_f = std::numeric_limits<double>::infinity();
  int total_evals = 0;
  bool exhausted = false;

  for (int s = 0; s < n_starts; ++s) {
    Eigen::VectorXd th(d);
    if (s == 0) {
      // all antennas on for every free point
      for (int j = 0; j < k - 1; ++j) {
        for (int i = 0; i < n; ++i) th(j * (n + 1) + i) = A;
        th(j * (n + 1) + n) = 0.0;
      }
    } else if (s == 1) {
      // longest chain prefixes of the norm-sorted ordering
      for (int j = 0; j < k - 1; ++j) {
        int pref = std::clamp(n - (k - 2) + j, 1, n);
        for (int i = 0; i < n; ++i) th(j * (n + 1) + i) = 0.0;
        for (int t = 0; t < pref; ++t) th(j * (n + 1) + by_norm[t]) = A;
        th(j * (n + 1) + n) = 0.0;
      }
    } else {
      for (int j = 0; j < k - 1; ++j) {
        for (int i = 0; i < n; ++i) th(j * (n + 1) + i) = A * rng.uniform();
        th(j * (n + 1) + n) = 2.0 * rng.uniform() - 1.0;
      }
    }
    int used = 0;
    double f = nelder_mead(prob, th, evals_per_start, &used);
    total_evals += used;
    if (f < best_f) {
      best_f = f;
      best_th = th;
    }
    if (total_evals >= budget && s + 1 < n_starts) {
      exhausted = true;
      break;
    }
  }

  // final high-sample evaluation of the best candidate
  std::vector<Eigen::VectorXd> xbars;
  Eigen::VectorXd probs;
  std::vector<Eigen::VectorXd> xraw;
  prob.decode(best_th, xbars, probs, &xraw);

  KPointResult res;
  res.budget_exhausted = exhausted;
  res.mi = mi_discrete_gaussian(xbars, probs, n_samples_final, seed + 999);

  // report minimum-energy representatives, merging coincident image points
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> ps;
  for (int j = 0; j < static_cast<int>(xbars.size()); ++j) {
    if (probs(j) < 1e-15) continue;
    Eigen::VectorXd xm = (j == 0) ? Eigen::VectorXd::Zero(n)
                                  : min_energy_input(decomp, xbars[j]).x_min;
    bool merged = false;
    for (size_t t = 0; t < pts.size(); ++t)
      if ((pts[t] - xm).lpNorm<Eigen::Infinity>() < 1e-12) {
        ps[t] += probs(j);
        merged = true;
        break;
      }
    if (!merged) {
      pts.push_back(xm);
      ps.push_back(probs(j));
    }
  }
  res.input.points = pts;
  res.input.probs = Eigen::Map<Eigen::VectorXd>(ps.data(), ps.size());
  return res;
}

}  // namespace mimocap
