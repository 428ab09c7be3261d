#include "subpop/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace subpop {
namespace {

constexpr int kAllZeroRetries = 100;

struct MeanVar {
  double sum = 0.0, sumsq = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double var() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::max(0.0, (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
  }
  double se() const { return std::sqrt(var() / static_cast<double>(n)); }
};

}  // namespace

std::uint64_t Prior::total_count() const {
  std::uint64_t t = 0;
  for (const auto& e : entries) t += e.count;
  return t;
}

void Prior::validate() const {
  if (entries.empty()) throw std::invalid_argument("Prior: empty frequency list");
  bool positive = false;
  for (const auto& e : entries) {
    if (!(e.value >= 0.0)) throw std::invalid_argument("Prior: negative or NaN frequency");
    if (e.value > 0.0 && e.count > 0) positive = true;
  }
  if (!positive) throw std::invalid_argument("Prior: no positive frequency");
}

Prior uniform_prior(double value) {
  Prior p;
  p.kind = PriorKind::kUniform;
  p.entries = {{value, 1}};
  p.validate();
  return p;
}

Prior build_bimodal_prior(int n, bool appendix_variant, std::uint64_t n_max) {
  if (n < 2) throw std::invalid_argument("build_bimodal_prior: n must be >= 2");
  if (n > 62 || (std::uint64_t{1} << n) > n_max)
    throw std::overflow_error("build_bimodal_prior: 2^n exceeds configured maximum");
  const std::uint64_t pow2n = std::uint64_t{1} << n;
  const double heavy = 1.0 / (2.0 * static_cast<double>(n));
  const double light = std::ldexp(1.0, -(n + 1));
  Prior p;
  p.kind = PriorKind::kBimodal;
  if (appendix_variant) {
    p.entries = {{heavy, 1},
                 {light, static_cast<std::uint64_t>(n) * pow2n - 1}};
  } else {
    p.entries = {{heavy, static_cast<std::uint64_t>(n)},
                 {light, pow2n - static_cast<std::uint64_t>(n)}};
  }
  p.validate();
  return p;
}

void MixtureWeights::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("MixtureWeights: negative or NaN entry");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("MixtureWeights: entries do not sum to 1");
}

std::vector<double> sample_weights_raw(const Prior& prior, int N, RngStream& rng) {
  prior.validate();
  if (N < 1) throw std::invalid_argument("sample_weights_raw: N must be >= 1");
  std::vector<double> counts(prior.entries.size());
  for (std::size_t i = 0; i < prior.entries.size(); ++i)
    counts[i] = static_cast<double>(prior.entries[i].count);
  const AliasTable table(counts);
  std::vector<double> delta(static_cast<std::size_t>(N));
  for (auto& d : delta) d = prior.entries[static_cast<std::size_t>(table.sample(rng))].value;
  return delta;
}

MixtureWeights sample_weights(const Prior& prior, int N, RngStream& rng) {
  for (int attempt = 0; attempt < kAllZeroRetries; ++attempt) {
    std::vector<double> delta = sample_weights_raw(prior, N, rng);
    const auto [lo, hi] = std::minmax_element(delta.begin(), delta.end());
    if (*hi <= 0.0) continue;  // all-zero draw, resample
    MixtureWeights out;
    if (*lo == *hi) {
      // All masses equal: normalization is exactly uniform.
      out.weights.assign(delta.size(), 1.0 / static_cast<double>(N));
      return out;
    }
    double sum = 0.0;
    for (double d : delta) sum += d;
    out.weights.resize(delta.size());
    for (std::size_t j = 0; j < delta.size(); ++j) out.weights[j] = delta[j] / sum;
    return out;
  }
  throw std::runtime_error("sample_weights: all-zero mass vector after bounded retries");
}

MixtureStats mixture_stats(const Prior& prior, int n, int N, int trials,
                           RngStream& rng, bool force_monte_carlo) {
  prior.validate();
  if (n < 1 || N < 1) throw std::invalid_argument("mixture_stats: n and N must be >= 1");
  if (trials < 1) throw std::invalid_argument("mixture_stats: trials must be >= 1");

  MixtureStats st;
  if (prior.kind == PriorKind::kUniform && !force_monte_carlo) {
    // Uniform weights make every statistic exact.
    const double invN = 1.0 / static_cast<double>(N);
    st.tau0 = invN;
    st.tau1 = invN;
    st.mu1 = std::pow(1.0 - invN, n - 1);
    st.mu0 = static_cast<double>(N) * std::pow(1.0 - invN, n) / static_cast<double>(n);
    st.closed_form = true;
    return st;
  }

  MeanVar mu1_acc, mu0_acc;
  // Ratio estimators tau = E[stratum mass] / E[stratum count] need the
  // cross moments for a delta-method standard error.
  MeanVar s1_acc, k1_acc, s0_acc, k0_acc;
  double s1k1 = 0.0, s0k0 = 0.0;
  std::vector<int> balls(static_cast<std::size_t>(N));

  for (int t = 0; t < trials; ++t) {
    const MixtureWeights w = sample_weights(prior, N, rng);
    const AliasTable table(w.weights);
    std::fill(balls.begin(), balls.end(), 0);
    for (int b = 0; b < n; ++b) ++balls[static_cast<std::size_t>(table.sample(rng))];

    double k1 = 0.0, k0 = 0.0, s1 = 0.0, s0 = 0.0;
    for (int j = 0; j < N; ++j) {
      if (balls[static_cast<std::size_t>(j)] == 1) {
        k1 += 1.0;
        s1 += w.weights[static_cast<std::size_t>(j)];
      } else if (balls[static_cast<std::size_t>(j)] == 0) {
        k0 += 1.0;
        s0 += w.weights[static_cast<std::size_t>(j)];
      }
    }
    mu1_acc.add(k1 / static_cast<double>(n));
    mu0_acc.add(k0 / static_cast<double>(n));
    s1_acc.add(s1);
    k1_acc.add(k1);
    s0_acc.add(s0);
    k0_acc.add(k0);
    s1k1 += s1 * k1;
    s0k0 += s0 * k0;
  }

  st.mu1 = mu1_acc.mean();
  st.mu0 = mu0_acc.mean();
  st.mu1_se = mu1_acc.se();
  st.mu0_se = mu0_acc.se();

  const auto ratio_and_se = [trials](const MeanVar& s, const MeanVar& k,
                                     double cross_sum, double* se) {
    const double T = static_cast<double>(trials);
    if (k.mean() <= 0.0) {
      *se = std::numeric_limits<double>::quiet_NaN();
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double r = s.mean() / k.mean();
    double cov = 0.0;
    if (trials > 1) cov = (cross_sum - T * s.mean() * k.mean()) / (T - 1.0);
    const double var_r =
        (s.var() - 2.0 * r * cov + r * r * k.var()) / (T * k.mean() * k.mean());
    *se = std::sqrt(std::max(0.0, var_r));
    return r;
  };
  st.tau1 = ratio_and_se(s1_acc, k1_acc, s1k1, &st.tau1_se);
  st.tau0 = ratio_and_se(s0_acc, k0_acc, s0k0, &st.tau0_se);

  // tau1 * mu1 * n is the probability the test point lands in a singleton
  // subpopulation; the estimator form telescopes to mean singleton mass.
  if (std::isfinite(st.tau1)) {
    const double hit = st.tau1 * st.mu1 * static_cast<double>(n);
    if (hit < -1e-12 || hit > 1.0 + 1e-9)
      throw std::logic_error("mixture_stats: singleton hit probability outside [0,1]");
  }
  return st;
}

std::string prior_to_text(const Prior& prior) {
  std::string out;
  char line[64];
  for (const auto& e : prior.entries) {
    std::snprintf(line, sizeof(line), "%.17g %llu\n", e.value,
                  static_cast<unsigned long long>(e.count));
    out += line;
  }
  return out;
}

Prior prior_from_text(const std::string& text) {
  Prior p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double value = 0.0;
    unsigned long long count = 0;
    if (!(ls >> value >> count)) {
      throw std::invalid_argument("prior_from_text: malformed line " + std::to_string(lineno));
    }
    p.entries.push_back({value, static_cast<std::uint64_t>(count)});
  }
  p.kind = p.entries.size() == 1 ? PriorKind::kUniform : PriorKind::kCustom;
  p.validate();
  return p;
}

}  // namespace subpop
