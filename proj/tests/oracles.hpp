#pragma once

// Small reference implementations used as test oracles. They share no code
// with the library: plain vectors, scalar loops, Gaussian elimination.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline Vec solve(Mat a, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Scalar Gauss-Seidel iteration of V = r_pi + gamma P_pi V until the update is below tol.
inline Vec scalar_policy_value(const Mat& p_pi, const Vec& r_pi, double gamma, double tol = 1e-12) {
  Vec v(r_pi.size(), 0.0);
  for (int it = 0; it < 1000000; ++it) {
    double delta = 0.0;
    for (std::size_t s = 0; s < v.size(); ++s) {
      double x = r_pi[s];
      for (std::size_t t = 0; t < v.size(); ++t) x += gamma * p_pi[s][t] * v[t];
      delta = std::max(delta, std::abs(x - v[s]));
      v[s] = x;
    }
    if (delta < tol) return v;
  }
  throw std::runtime_error("scalar_policy_value did not converge");
}

inline double mean(const Vec& x) { return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size()); }

/// Population standard deviation, two-pass.
inline double pop_std(const Vec& x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / double(x.size()));
}

/// Average ranks (1-based), ties share the mean rank.
inline Vec ranks(const Vec& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Vec r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const Vec& x, const Vec& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const Vec& x, const Vec& y) { return pearson(ranks(x), ranks(y)); }

}  // namespace oracle
