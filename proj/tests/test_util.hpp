#pragma once

// Shared oracles and statistical helpers for the test suite. Oracles here are
// deliberately independent of the library implementations they check: exact
// log-space binomial sums, finite differences, and brute-force enumeration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace testutil {

// Exact Pr[Bin(d, 1/2) <= m] via log-space summation of the pmf.
inline double binom_half_cdf(int d, int m) {
  if (m < 0) return 0.0;
  if (m >= d) return 1.0;
  const double ln2 = std::log(2.0);
  std::vector<double> lt(static_cast<std::size_t>(m) + 1);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= m; ++i) {
    lt[static_cast<std::size_t>(i)] = std::lgamma(d + 1.0) - std::lgamma(i + 1.0) -
                                      std::lgamma(d - i + 1.0) - d * ln2;
    mx = std::max(mx, lt[static_cast<std::size_t>(i)]);
  }
  double s = 0.0;
  for (double v : lt) s += std::exp(v - mx);
  return std::exp(mx) * s;
}

// Standard error of a Bernoulli(p) mean estimated from k trials.
inline double bernoulli_se(double p, double k) {
  return std::sqrt(std::max(p * (1.0 - p), 1e-12) / k);
}

// Upper critical value of chi-squared with dof degrees of freedom at tail
// probability alpha, via the Wilson-Hilferty cube approximation. Good to a
// few percent for dof >= 10, which is all the chi-squared tests here need.
inline double chi2_critical(int dof, double alpha) {
  // z for upper-tail alpha of the standard normal (alpha in (0, 0.5)).
  // Beasley-Springer-Moro style rational approximation is overkill; a small
  // bisection on erfc is exact enough and has no magic constants.
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tail = 0.5 * std::erfc(mid / std::sqrt(2.0));
    (tail > alpha ? lo : hi) = mid;
  }
  const double z = 0.5 * (lo + hi);
  const double k = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

}  // namespace testutil
