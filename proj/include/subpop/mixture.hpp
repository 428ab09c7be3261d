#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subpop/rng.hpp"

namespace subpop {

enum class PriorKind { kUniform, kBimodal, kCustom };

struct PriorEntry {
  double value = 0.0;       // nonnegative frequency
  std::uint64_t count = 1;  // multiplicity in the list
};

// Frequency list the per-subpopulation masses delta_j are drawn from,
// stored run-length style so huge multiplicities stay O(1).
struct Prior {
  PriorKind kind = PriorKind::kCustom;
  std::vector<PriorEntry> entries;

  std::uint64_t total_count() const;
  // Throws std::invalid_argument unless nonempty with all values >= 0 and at
  // least one positive value of positive multiplicity.
  void validate() const;
};

// Single-entry prior; every sampled mass equals `value`, so the normalized
// weights are exactly uniform.
Prior uniform_prior(double value = 1.0);

// Two-valued prior over N = 2^n bins: heavy value 1/(2n), light value
// 1/2^(n+1). The default draws the heavy value with probability n*2^-n
// (n heavy copies, 2^n - n light). appendix_variant instead uses 1 heavy
// copy out of n*2^n, i.e. heavy probability 1/(n*2^n). Throws
// std::invalid_argument for n < 2 and std::overflow_error when 2^n > n_max.
Prior build_bimodal_prior(int n, bool appendix_variant = false,
                          std::uint64_t n_max = std::uint64_t{1} << 20);

struct MixtureWeights {
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
  // Throws unless entries are nonnegative and sum to 1 within 1e-12.
  void validate() const;
};

// N i.i.d. draws from the prior's value list, unnormalized.
std::vector<double> sample_weights_raw(const Prior& prior, int N, RngStream& rng);

// Normalized mixture weights. All-zero draws are resampled up to a bounded
// retry count, then reported as std::runtime_error. A draw whose masses are
// all equal normalizes to exactly 1/N per entry.
MixtureWeights sample_weights(const Prior& prior, int N, RngStream& rng);

// Singleton statistics of the induced example distribution:
//   tau1 (tau0): probability the test point comes from a given singleton
//   (unrepresented) subpopulation; mu1 = E[#singletons]/n and
//   mu0 = E[#unrepresented]/n. mu0 may exceed 1 when N >> n.
// Estimates are Monte Carlo with reported standard errors unless the prior
// is uniform, where the closed forms are exact and the errors are zero.
struct MixtureStats {
  double tau0 = 0.0, tau1 = 0.0, mu0 = 0.0, mu1 = 0.0;
  double tau0_se = 0.0, tau1_se = 0.0, mu0_se = 0.0, mu1_se = 0.0;
  bool closed_form = false;
};

MixtureStats mixture_stats(const Prior& prior, int n, int N, int trials,
                           RngStream& rng, bool force_monte_carlo = false);

// Plain-text serialization, one "value count" pair per line.
std::string prior_to_text(const Prior& prior);
Prior prior_from_text(const std::string& text);

}  // namespace subpop
