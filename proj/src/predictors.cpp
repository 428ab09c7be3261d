#include "subpop/predictors.hpp"

#include "subpop/prob.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace subpop {
namespace {

void fill_onehot(std::span<double> out, int idx, int classes) {
  if (static_cast<int>(out.size()) != classes)
    throw std::invalid_argument("predict_proba: output span has wrong length");
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<std::size_t>(idx)] = 1.0;
}

}  // namespace

int argmax_lowest(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax_lowest: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

void ProbClassifier::predict_proba_batch(std::span<const Features> zs,
                                         std::span<double> out) const {
  const std::size_t C = static_cast<std::size_t>(num_classes());
  if (out.size() != zs.size() * C)
    throw std::invalid_argument("predict_proba_batch: output span has wrong length");
  for (std::size_t i = 0; i < zs.size(); ++i)
    predict_proba(zs[i], out.subspan(i * C, C));
}

int ProbClassifier::predict(const Features& z) const {
  std::vector<double> p(static_cast<std::size_t>(num_classes()));
  predict_proba(z, p);
  return argmax_lowest(p);
}

int nn_predict_hc(const Dataset& data, const BitString& z) {
  if (data.examples.empty()) throw std::invalid_argument("nn_predict_hc: empty dataset");
  std::size_t best = 0;
  std::size_t best_dist = hamming(std::get<BitString>(data.examples[0].features), z);
  for (std::size_t i = 1; i < data.examples.size(); ++i) {
    const std::size_t dist = hamming(std::get<BitString>(data.examples[i].features), z);
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return data.examples[best].label;
}

int baseline_hc_predict(const Dataset& data, const BitString& z, double rho) {
  if (data.examples.empty())
    throw std::invalid_argument("baseline_hc_predict: empty dataset");
  const double d = static_cast<double>(z.size());
  const double tau = d / 2.0 - 3.0 * rho * d / 8.0;

  // first two example indices per subpopulation, plus total multiplicity
  std::map<int, std::vector<std::size_t>> reps;
  std::map<int, int> occur;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const int j = data.examples[i].subpop;
    ++occur[j];
    auto& r = reps[j];
    if (r.size() < 2) r.push_back(i);
  }

  for (const auto& [j, r] : reps) {
    if (occur[j] < 2) continue;
    const double d0 =
        static_cast<double>(hamming(std::get<BitString>(data.examples[r[0]].features), z));
    const double d1 =
        static_cast<double>(hamming(std::get<BitString>(data.examples[r[1]].features), z));
    if (d0 <= tau && d1 <= tau) return data.examples[r[0]].label;
  }

  std::size_t best = data.examples.size();
  std::size_t best_dist = 0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    if (occur[data.examples[i].subpop] != 1) continue;
    const std::size_t dist = hamming(std::get<BitString>(data.examples[i].features), z);
    if (best == data.examples.size() || dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  if (best < data.examples.size()) return data.examples[best].label;
  return nn_predict_hc(data, z);
}

int nsp_predict(const Dataset& data, const NspFeatures& query, RngStream& rng) {
  int best_prefix = -1;
  std::size_t best = 0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto* f = std::get_if<NspFeatures>(&data.examples[i].features);
    if (f == nullptr || f->subpop != query.subpop) continue;
    const int len = static_cast<int>(f->prefix.size());
    if (len > best_prefix) {
      best_prefix = len;
      best = i;
    }
  }
  const int q = static_cast<int>(query.prefix.size());
  if (best_prefix >= q) {
    // stored string is prefix followed by the stored label
    const auto& f = std::get<NspFeatures>(data.examples[best].features);
    if (q < best_prefix) return static_cast<int>(f.prefix.get(static_cast<std::size_t>(q)));
    return data.examples[best].label;
  }
  return rng.bernoulli(0.5) ? 1 : 0;
}

int la_predict(const Dataset& data, const SymbolString& z) {
  if (data.examples.empty()) throw std::invalid_argument("la_predict: empty dataset");
  std::size_t best = 0;
  int best_matches = -1;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& s = std::get<SymbolString>(data.examples[i].features);
    if (s.size() != z.size())
      throw std::invalid_argument("la_predict: length mismatch");
    int matches = 0;
    for (std::size_t p = 0; p < z.size(); ++p)
      if (s[p] == z[p]) ++matches;
    if (matches > best_matches) {
      best_matches = matches;
      best = i;
    }
  }
  return data.examples[best].label;
}

void NnHcClassifier::predict_proba(const Features& z, std::span<double> out) const {
  fill_onehot(out, nn_predict_hc(*data_, std::get<BitString>(z)), classes_);
}

void BaselineHcClassifier::predict_proba(const Features& z, std::span<double> out) const {
  fill_onehot(out, baseline_hc_predict(*data_, std::get<BitString>(z), rho_), classes_);
}

void NspClassifier::predict_proba(const Features& z, std::span<double> out) const {
  fill_onehot(out, nsp_predict(*data_, std::get<NspFeatures>(z), *coin_rng_), 2);
}

void LaClassifier::predict_proba(const Features& z, std::span<double> out) const {
  fill_onehot(out, la_predict(*data_, std::get<SymbolString>(z)), classes_);
}

namespace {

// Batched misclassification count; blocks bound the scratch buffer.
StratumError eval_stratum(const ProbClassifier& clf, const std::vector<Features>& feats,
                          const std::vector<int>& labels) {
  StratumError s;
  s.count = static_cast<std::int64_t>(feats.size());
  if (feats.empty()) return s;
  const std::size_t C = static_cast<std::size_t>(clf.num_classes());
  const std::size_t block = std::max<std::size_t>(1, 4096 / std::max<std::size_t>(C, 1) + 1);
  std::vector<double> out;
  for (std::size_t start = 0; start < feats.size(); start += block) {
    const std::size_t len = std::min(block, feats.size() - start);
    out.assign(len * C, 0.0);
    clf.predict_proba_batch(std::span<const Features>(feats.data() + start, len), out);
    for (std::size_t i = 0; i < len; ++i) {
      const int pred = argmax_lowest(std::span<const double>(out.data() + i * C, C));
      if (pred != labels[start + i]) ++s.errors;
    }
  }
  s.rate = static_cast<double>(s.errors) / static_cast<double>(s.count);
  s.defined = true;
  return s;
}

// num_test draws with subpopulations restricted to `keep` and weights
// renormalized; empty when no kept subpopulation has mass.
StratumError eval_conditional(const ProbClassifier& clf, const TaskInstance& inst,
                              const MixtureWeights& weights, const std::vector<char>& keep,
                              int num_test, RngStream& rng) {
  std::vector<double> restricted(weights.weights.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < restricted.size(); ++j) {
    if (keep[j]) {
      restricted[j] = weights.weights[j];
      total += restricted[j];
    }
  }
  if (total <= 0.0) return StratumError{};
  const AliasTable table(restricted);
  std::vector<Features> feats;
  std::vector<int> labels;
  feats.reserve(static_cast<std::size_t>(num_test));
  labels.reserve(static_cast<std::size_t>(num_test));
  for (int t = 0; t < num_test; ++t) {
    const int j = table.sample(rng);
    LabeledExample ex = sample_task_example(inst, j, rng);
    feats.push_back(std::move(ex.features));
    labels.push_back(ex.label);
  }
  return eval_stratum(clf, feats, labels);
}

}  // namespace

ErrorReport evaluate_errors(const ProbClassifier& clf, const TaskInstance& inst,
                            const MixtureWeights& weights, const Dataset& data,
                            int num_test, RngStream& rng) {
  const int N = task_subpop_count(inst);
  if (weights.size() != N)
    throw std::invalid_argument("evaluate_errors: weights length does not match instance");
  weights.validate();
  if (num_test < 1) throw std::invalid_argument("evaluate_errors: num_test must be >= 1");

  std::vector<int> occur(static_cast<std::size_t>(N), 0);
  for (const auto& ex : data.examples) {
    if (ex.subpop < 0 || ex.subpop >= N)
      throw std::out_of_range("evaluate_errors: dataset subpop outside instance range");
    ++occur[static_cast<std::size_t>(ex.subpop)];
  }

  ErrorReport report;
  {
    std::vector<Features> feats;
    std::vector<int> labels;
    feats.reserve(data.examples.size());
    labels.reserve(data.examples.size());
    for (const auto& ex : data.examples) {
      feats.push_back(ex.features);
      labels.push_back(ex.label);
    }
    report.train = eval_stratum(clf, feats, labels);
  }

  const std::vector<char> all(static_cast<std::size_t>(N), 1);
  std::vector<char> represented(static_cast<std::size_t>(N), 0);
  std::vector<char> single(static_cast<std::size_t>(N), 0);
  for (int j = 0; j < N; ++j) {
    represented[j] = occur[j] >= 1;
    single[j] = occur[j] == 1;
  }
  report.test = eval_conditional(clf, inst, weights, all, num_test, rng);
  report.represented = eval_conditional(clf, inst, weights, represented, num_test, rng);
  report.singletons = eval_conditional(clf, inst, weights, single, num_test, rng);
  return report;
}

double nsp_singleton_error_estimate(int d, double delta, int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("nsp_singleton_error_estimate: trials >= 1");
  int fails = 0;
  for (int t = 0; t < trials; ++t) {
    const NSPInstance inst = sample_nsp_instance(1, d, delta, rng);
    Dataset data;
    data.num_subpops = 1;
    data.examples.push_back(sample_nsp_example(inst, 0, rng));
    data.recount_singletons();
    const LabeledExample probe = sample_nsp_example(inst, 0, rng);
    const int pred = nsp_predict(data, std::get<NspFeatures>(probe.features), rng);
    if (pred != probe.label) ++fails;
  }
  return static_cast<double>(fails) / trials;
}

double nsp_singleton_error_exact(int d, double delta) {
  if (d < 1) throw std::domain_error("nsp_singleton_error_exact: d must be >= 1");
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::domain_error("nsp_singleton_error_exact: delta outside [0,1)");
  const double dd = static_cast<double>(d);
  return 0.5 - ((dd + 1.0) / (2.0 * dd)) * (1.0 - delta) * (1.0 - delta) / 2.0;
}

double sing_error_estimate(int k, int d, double a, int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("sing_error_estimate: trials >= 1");
  const double rho = rho_for(k, 1.0, a, d);
  const double q = (1.0 - rho) / 2.0;
  std::vector<BitString> xs(static_cast<std::size_t>(k));
  int fails = 0;
  for (int t = 0; t < trials; ++t) {
    for (auto& x : xs) x = BitString::random(static_cast<std::size_t>(d), rng);
    const int m = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k)));
    const BitString y = bsc_apply(xs[static_cast<std::size_t>(m)], q, rng);
    int best = 0;
    std::size_t best_dist = hamming(xs[0], y);
    for (int j = 1; j < k; ++j) {
      const std::size_t dist = hamming(xs[static_cast<std::size_t>(j)], y);
      if (dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    if (best != m) ++fails;
  }
  return static_cast<double>(fails) / trials;
}

}  // namespace subpop
