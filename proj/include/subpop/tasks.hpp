#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "subpop/bits.hpp"
#include "subpop/mixture.hpp"
#include "subpop/rng.hpp"

namespace subpop {

using SymbolString = std::vector<std::uint32_t>;

// Prefix features of the next-symbol task travel with the subpopulation
// identifier of the string they were cut from.
struct NspFeatures {
  int subpop = 0;
  BitString prefix;
  bool operator==(const NspFeatures&) const = default;
};

using Features = std::variant<BitString, NspFeatures, SymbolString>;

struct LabeledExample {
  Features features;
  int label = 0;   // class id for cluster tasks, bit for sequence tasks
  int subpop = 0;  // generating subpopulation, 0-based
};

// Hypercube cluster labeling: subpopulation j pins the index set I_j (mask)
// to the bits of b_j (value) and leaves the rest uniform; the label is j.
struct HCInstance {
  int N = 0;
  int d = 0;
  double rho = 0.0;
  std::vector<BitString> fixed_mask;
  std::vector<BitString> fixed_value;  // zero off the mask
};

// Next-symbol prediction: noisy prefixes of per-subpopulation reference
// strings, labeled by a noisy copy of the next bit.
struct NSPInstance {
  int N = 0;
  int d = 0;
  double delta = 0.0;
  std::vector<BitString> reference;
};

// Large-alphabet cluster identification: symbol strings over [alphabet]
// whose key position i_j always carries sigma_j.
struct LAInstance {
  int N = 0;
  int d = 0;
  std::uint32_t alphabet = 0;
  std::vector<int> key_index;
  std::vector<std::uint32_t> key_symbol;
};

// Threshold labeling of padded prefixes against a hidden threshold string.
struct ThresholdInstance {
  int d = 0;
  BitString threshold;
};

// Two-length next-symbol variant: noiseless prefixes of one reference
// string, always cut at one of two instance-fixed lengths.
struct TwoLengthInstance {
  int d = 0;
  BitString reference;
  int len_a = 0;
  int len_b = 0;
};

using TaskInstance =
    std::variant<HCInstance, NSPInstance, LAInstance, ThresholdInstance, TwoLengthInstance>;

enum class TaskKind { kHypercube, kNextSymbol, kLargeAlphabet, kThreshold, kTwoLength };

TaskKind task_kind(const TaskInstance& inst);
const char* task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);
int task_subpop_count(const TaskInstance& inst);  // 1 for single-population tasks
int task_dim(const TaskInstance& inst);

HCInstance sample_hc_instance(int N, int d, double rho, RngStream& rng);
LabeledExample sample_hc_example(const HCInstance& inst, int j, RngStream& rng);

NSPInstance sample_nsp_instance(int N, int d, double delta, RngStream& rng);
LabeledExample sample_nsp_example(const NSPInstance& inst, int j, RngStream& rng);
// Same with the prefix length pinned; used by tests and the conditional
// error estimators.
LabeledExample sample_nsp_example_at(const NSPInstance& inst, int j, int ell, RngStream& rng);

// t = ceil(c_alphabet * N * d). Throws when the alphabet degenerates
// (t < 2 or t < d).
LAInstance sample_la_instance(int N, int d, double c_alphabet, RngStream& rng);
LabeledExample sample_la_example(const LAInstance& inst, int j, RngStream& rng);

ThresholdInstance sample_threshold_instance(int d, RngStream& rng);
LabeledExample sample_threshold_example(const ThresholdInstance& inst, RngStream& rng);
// Pinned prefix length and branch choice. copy_branch copies the threshold
// prefix; otherwise the prefix is uniform.
LabeledExample sample_threshold_example_at(const ThresholdInstance& inst, int ell,
                                           bool copy_branch, RngStream& rng);

TwoLengthInstance sample_two_length_instance(int d, RngStream& rng);
LabeledExample sample_two_length_example(const TwoLengthInstance& inst, RngStream& rng);

struct TwoLengthKnowledge {
  bool known = false;
  int len_a = 0, len_b = 0;  // the two distinct observed prefix lengths
  int next_a = 0, next_b = 0;  // their observed next bits
};

// Reads off the instance parameters as soon as two samples with different
// prefix lengths exist; reports unknown otherwise.
TwoLengthKnowledge two_length_learner(const std::vector<LabeledExample>& samples);

// Dispatch on the instance variant. Single-population tasks accept only j=0.
LabeledExample sample_task_example(const TaskInstance& inst, int j, RngStream& rng);

struct Dataset {
  std::vector<LabeledExample> examples;
  std::vector<std::uint8_t> singleton_mask;  // 1 iff the example's subpop occurs once
  int num_singletons = 0;                    // K
  int num_subpops = 0;                       // N of the generating instance

  int size() const { return static_cast<int>(examples.size()); }
  // Rebuilds singleton bookkeeping from the example list.
  void recount_singletons();
};

// n i.i.d. draws: subpopulation by weights, example by the instance.
// weights.size() must equal the instance subpopulation count.
Dataset generate_dataset(const TaskInstance& inst, const MixtureWeights& weights, int n,
                         RngStream& rng);

// rho = sqrt((2 ln(a mu1 n) - ln ln n) / d). Domain errors when n < 3,
// a*mu1*n <= 1, the radicand is negative, or the result exceeds 1.
double rho_for(int n, double mu1, double a, int d);

struct DatasetHeader {
  TaskKind kind = TaskKind::kHypercube;
  int n = 0;
  int N = 0;
  int d = 0;
  double param = 0.0;  // rho, delta, or t depending on the task
  std::uint64_t seed = 0;
};

// Tab-separated text form: one header line, then per example
// "subpop<TAB>label<TAB>features" with 1-based ids for subpopulations and
// class labels, '0'/'1' characters for bits, and space-separated decimal
// integers for symbol strings.
std::string dataset_to_text(const Dataset& data, TaskKind kind, int d, double param,
                            std::uint64_t seed);
std::pair<Dataset, DatasetHeader> dataset_from_text(const std::string& text);

// Instance plus mixture weights in plain text, so evaluation and attack
// stages can reload exactly what generation produced.
std::string instance_to_text(const TaskInstance& inst, const MixtureWeights& weights);
std::pair<TaskInstance, MixtureWeights> instance_from_text(const std::string& text);

}  // namespace subpop
