#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "subpop/tasks.hpp"

namespace subpop {

// Lowest index among the maxima; the tie rule for every argmax decision.
int argmax_lowest(std::span<const double> v);

// A classifier queried only through probability outputs. Attacks and the
// evaluation harness see nothing else.
class ProbClassifier {
 public:
  virtual ~ProbClassifier() = default;
  virtual int num_classes() const = 0;
  // Fills out (length num_classes()) with a distribution over class ids.
  virtual void predict_proba(const Features& z, std::span<double> out) const = 0;
  // Row-major batch; out.size() must equal zs.size() * num_classes().
  // The default loops; dense models override with one matrix product.
  virtual void predict_proba_batch(std::span<const Features> zs,
                                   std::span<double> out) const;
  int predict(const Features& z) const;
};

// Label of the training example nearest to z in Hamming distance; ties go to
// the lowest example index.
int nn_predict_hc(const Dataset& data, const BitString& z);

// Two-representative test with threshold tau = d/2 - 3*rho*d/8, then nearest
// singleton, then nearest overall.
int baseline_hc_predict(const Dataset& data, const BitString& z, double rho);

// Longest stored string for the query's subpopulation id; its bit at the
// query position if long enough, otherwise a fair coin from rng.
int nsp_predict(const Dataset& data, const NspFeatures& query, RngStream& rng);

// Label of the training example with the most agreeing positions.
int la_predict(const Dataset& data, const SymbolString& z);

// One-hot adapters exposing the predictors above as ProbClassifiers.
class NnHcClassifier : public ProbClassifier {
 public:
  NnHcClassifier(const Dataset* data, int num_classes)
      : data_(data), classes_(num_classes) {}
  int num_classes() const override { return classes_; }
  void predict_proba(const Features& z, std::span<double> out) const override;

 private:
  const Dataset* data_;
  int classes_;
};

class BaselineHcClassifier : public ProbClassifier {
 public:
  BaselineHcClassifier(const Dataset* data, int num_classes, double rho)
      : data_(data), classes_(num_classes), rho_(rho) {}
  int num_classes() const override { return classes_; }
  void predict_proba(const Features& z, std::span<double> out) const override;

 private:
  const Dataset* data_;
  int classes_;
  double rho_;
};

class NspClassifier : public ProbClassifier {
 public:
  // Fair-coin fallbacks draw from *coin_rng, keeping evaluation reproducible.
  NspClassifier(const Dataset* data, RngStream* coin_rng)
      : data_(data), coin_rng_(coin_rng) {}
  int num_classes() const override { return 2; }
  void predict_proba(const Features& z, std::span<double> out) const override;

 private:
  const Dataset* data_;
  RngStream* coin_rng_;
};

class LaClassifier : public ProbClassifier {
 public:
  LaClassifier(const Dataset* data, int num_classes)
      : data_(data), classes_(num_classes) {}
  int num_classes() const override { return classes_; }
  void predict_proba(const Features& z, std::span<double> out) const override;

 private:
  const Dataset* data_;
  int classes_;
};

struct StratumError {
  double rate = std::numeric_limits<double>::quiet_NaN();
  std::int64_t errors = 0;
  std::int64_t count = 0;
  bool defined = false;  // false when the stratum had nothing to evaluate
};

struct ErrorReport {
  StratumError train;        // on the dataset itself
  StratumError test;         // fresh draws from the full mixture
  StratumError represented;  // fresh draws from subpops with >= 1 example
  StratumError singletons;   // fresh draws from subpops with exactly 1
};

// Fresh draws are taken in stratum order test, represented, singletons,
// num_test each, with conditioning done by restricting and renormalizing the
// mixture weights.
ErrorReport evaluate_errors(const ProbClassifier& clf, const TaskInstance& inst,
                            const MixtureWeights& weights, const Dataset& data,
                            int num_test, RngStream& rng);

// Monte Carlo error of nsp_predict when the test subpopulation has exactly
// one stored example, and its exact finite-d value
// 1/2 - ((d+1)/(2d)) * (1-delta)^2 / 2.
double nsp_singleton_error_estimate(int d, double delta, int trials, RngStream& rng);
double nsp_singleton_error_exact(int d, double delta);

// Monte Carlo nearest-neighbor failure rate on k uniform d-bit strings with
// a (1-rho)/2-noisy query, rho = sqrt((2 ln(a k) - ln ln k)/d).
double sing_error_estimate(int k, int d, double a, int trials, RngStream& rng);

}  // namespace subpop
