#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "subpop/bits.hpp"
#include "subpop/predictors.hpp"
#include "subpop/rng.hpp"
#include "subpop/tasks.hpp"

namespace subpop {

// Black-box reconstruction of a d-bit string from a probability classifier.
// Starts at a uniform random point and cycles through coordinates i = t mod d
// for t = 1..T, keeping whichever bit value scores higher for the target class
// (zero wins ties). The chosen score never decreases across iterations.
BitString coordinate_ascent_attack(const ProbClassifier& f, int target, int d,
                                   int T, RngStream& rng);

// Reconstructs each bit independently: draws k random probes, compares the
// target-class score with the bit forced to 0 versus forced to 1, and takes
// the majority vote. An exact tie in either the comparison or the vote count
// resolves to 0.
BitString gradient_sign_attack(const ProbClassifier& f, int target, int d,
                               int k, RngStream& rng);

// Mean fraction of wrong bits across matched estimate/truth pairs, as a
// percentage in [0, 100].
double recovery_error(const std::vector<BitString>& estimates,
                      const std::vector<BitString>& truths);

enum class AttackKind { coordinate_ascent, gradient_sign };

const char* attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(const std::string& name);

struct AttackParams {
  int iterations = 0;            // coordinate ascent steps; 0 means 2*d
  int probes = 32;               // gradient-sign votes per bit
  std::size_t max_targets = 20;  // singletons attacked per trial
};

struct AttackTargetResult {
  int trial = 0;
  std::string classifier;
  std::string attack;
  int subpop = 0;  // 1-based id, matching serialized datasets
  int d = 0;
  int bit_errors = 0;
  double bit_error_fraction = 0.0;
};

struct AttackReport {
  std::vector<AttackTargetResult> targets;

  // 100 * mean bit_error_fraction over all targets; throws if empty.
  double recovery_error_percent() const;
};

// Uniformly sampled distinct indices (into data.examples) of singleton
// examples, at most max_targets of them.
std::vector<std::size_t> pick_singleton_targets(const Dataset& data,
                                                std::size_t max_targets,
                                                RngStream& rng);

// Attacks a random subset of singletons, using each singleton's own label as
// the target class and its stored bits as ground truth.
AttackReport attack_singletons(const ProbClassifier& clf,
                               const std::string& clf_name, AttackKind kind,
                               const AttackParams& params, const Dataset& data,
                               int d, int trial, RngStream& rng);

// CSV: trial,classifier,attack,target_subpop,d,bit_errors,bit_error_fraction
// followed by one aggregate row per (classifier, attack) with trial "all".
void attack_report_to_csv(const AttackReport& report, std::ostream& out);

// Reference classifier for self-checks: the target class scores the fraction
// of bits matching a planted string, so both attacks must recover the string
// exactly.
class MonotoneOracle : public ProbClassifier {
 public:
  MonotoneOracle(BitString planted, int target, int num_classes);

  int num_classes() const override { return num_classes_; }
  void predict_proba(const Features& z, std::span<double> out) const override;

 private:
  BitString planted_;
  int target_ = 0;
  int num_classes_ = 2;
};

}  // namespace subpop
