#ifndef MIMOCAP_NUMUTIL_HPP
#define MIMOCAP_NUMUTIL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace mimocap {

/// log(sum_i exp(v_i)), max-shifted.
inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

struct GoldenResult {
  double x;
  double fx;
};

/// Golden-section minimization on [a,b]; tol is in x. Returns the best
/// evaluated point, endpoints included.
inline GoldenResult golden_min(const std::function<double(double)>& f, double a,
                               double b, double tol, int max_iter = 200) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  double best_x = fc < fd ? c : d;
  double best_f = std::min(fc, fd);
  const double fa = f(a), fb = f(b);
  if (fa < best_f) { best_f = fa; best_x = a; }
  if (fb < best_f) { best_f = fb; best_x = b; }
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
    if (fc < best_f) { best_f = fc; best_x = c; }
    if (fd < best_f) { best_f = fd; best_x = d; }
  }
  return {best_x, best_f};
}

inline GoldenResult golden_max(const std::function<double(double)>& f, double a,
                               double b, double tol, int max_iter = 200) {
  auto r = golden_min([&](double x) { return -f(x); }, a, b, tol, max_iter);
  return {r.x, -r.fx};
}

/// Bisection for f(x)=0 on a bracket with f(lo), f(hi) of opposite sign.
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double flo, int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Deterministic RNG: mt19937_64 with explicit Box-Muller so the stream is
/// identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {
    // 53-bit uniform in [0,1)
    return (eng_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  /// index into a cumulative-probability table, inverse-CDF style
  int categorical(std::span<const double> cum) {
    double u = uniform();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    int idx = static_cast<int>(it - cum.begin());
    return std::min<int>(idx, static_cast<int>(cum.size()) - 1);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Euclidean projection onto the probability simplex.
inline void project_simplex(std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  std::vector<double> u(y);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  for (double& v : y) v = std::max(0.0, v - theta);
}

}  // namespace mimocap

#endif
