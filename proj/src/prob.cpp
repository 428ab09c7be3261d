#include "subpop/prob.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace subpop {

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double binary_entropy_inverse(double y) {
  if (!(y >= 0.0 && y <= 1.0))
    throw std::domain_error("binary_entropy_inverse: y outside [0,1]");
  if (y == 0.0) return 0.0;
  if (y == 1.0) return 0.5;
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200 && lo < hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (binary_entropy(mid) < y)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(binary_entropy(hi) - y) < std::abs(binary_entropy(lo) - y)
             ? hi
             : lo;
}

BitString bsc_apply(const BitString& x, double flip_prob, RngStream& rng) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
    throw std::domain_error("bsc_apply: flip_prob outside [0,1]");
  BitString out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.next_double() < flip_prob) out.flip(i);
  }
  return out;
}

double littlewood_tail(std::size_t d, double x) {
  (void)d;  // enters only through the validity range
  if (!(x > 0.0)) throw std::domain_error("littlewood_tail: x must be positive");
  return std::exp(-x * x / 2.0) / (std::sqrt(2.0 * std::numbers::pi) * x);
}

bool littlewood_in_validity_range(std::size_t d, double x) {
  return x > 1.0 && x < std::pow(static_cast<double>(d), 0.25);
}

double normal_cdf(double a) {
  return 0.5 * std::erfc(-a / std::numbers::sqrt2);
}

JensenCheck weighted_jensen_holds(std::span<const double> xs,
                                  std::span<const double> gs,
                                  const std::function<double(double)>& f) {
  if (xs.size() != gs.size())
    throw std::invalid_argument("weighted_jensen_holds: list length mismatch");
  if (xs.empty()) throw std::invalid_argument("weighted_jensen_holds: empty input");

  const double n = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_xfg = 0.0, mean_xg = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] >= 0.0))
      throw std::invalid_argument("weighted_jensen_holds: negative or NaN weight");
    mean_x += xs[i];
    mean_xg += xs[i] * gs[i];
    mean_xfg += xs[i] * f(gs[i]);
  }
  mean_x /= n;
  mean_xg /= n;
  mean_xfg /= n;
  if (!(mean_x > 0.0))
    throw std::invalid_argument("weighted_jensen_holds: all weights are zero");

  JensenCheck out;
  out.lhs = mean_xfg;
  out.rhs = mean_x * f(mean_xg / mean_x);
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

}  // namespace subpop
