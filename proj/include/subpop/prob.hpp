#pragma once

#include <functional>
#include <span>

#include "subpop/bits.hpp"
#include "subpop/rng.hpp"

namespace subpop {

// Binary entropy in bits, -p*log2(p) - (1-p)*log2(1-p) with 0*log0 := 0.
// Throws std::domain_error outside [0,1].
double binary_entropy(double p);

// Inverse of binary_entropy restricted to [0, 1/2]: the p with
// binary_entropy(p) nearest y, found by bisection to the last bit.
// Throws std::domain_error outside [0,1].
double binary_entropy_inverse(double y);

// Independent per-bit flips with the given probability. Throws
// std::domain_error if flip_prob is outside [0,1].
BitString bsc_apply(const BitString& x, double flip_prob, RngStream& rng);

// Closed-form approximation (1/(sqrt(2*pi)*x)) * exp(-x^2/2) to the lower
// binomial tail Pr[Bin(d,1/2) <= d/2 - x*sqrt(d/4)]. Accurate only inside
// 1 < x < d^(1/4); see littlewood_in_validity_range. Throws std::domain_error
// for x <= 0.
double littlewood_tail(std::size_t d, double x);
bool littlewood_in_validity_range(std::size_t d, double x);

// Standard normal CDF, absolute error well under 1e-9.
double normal_cdf(double a);

struct JensenCheck {
  double lhs = 0.0;  // E[X * f(g(X))]
  double rhs = 0.0;  // E[X] * f(E[X * g(X)] / E[X])
  bool holds = false;
};

// Evaluates both sides of the weighted Jensen inequality
// E[X f(g(X))] <= E[X] f(E[X g(X)] / E[X]) under the empirical distribution
// on the paired lists, for concave f and nonnegative X. holds is true when
// lhs <= rhs + 1e-9. Throws std::invalid_argument on size mismatch, empty
// input, negative entries, or all-zero xs.
JensenCheck weighted_jensen_holds(std::span<const double> xs,
                                  std::span<const double> gs,
                                  const std::function<double(double)>& f);

}  // namespace subpop
