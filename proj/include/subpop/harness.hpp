#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "subpop/attacks.hpp"
#include "subpop/predictors.hpp"
#include "subpop/tasks.hpp"
#include "subpop/train.hpp"

namespace subpop {

// Parse failure in a config or bounds-input file, tagged with the 1-based
// line number it was found on.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

enum class ClassifierKind { kLogit, kMlp, kNearest, kBaseline, kMonotone };

const char* classifier_kind_name(ClassifierKind kind);
ClassifierKind classifier_kind_from_name(const std::string& name);

// Everything a run needs; every output byte is a function of this struct.
struct ExperimentConfig {
  // [task]
  TaskKind task = TaskKind::kHypercube;
  int n = 100;
  int N = 100;
  int d = 300;
  std::string prior = "uniform";  // uniform | bimodal | bimodal_appendix
  double a = 50000.0;             // similarity calibration when rho unset
  std::optional<double> rho;      // explicit cluster similarity
  double delta = 0.2;             // sequence-task noise
  double alphabet_factor = 4.0;   // symbol-task alphabet size, t = ceil(f*N*d)

  // [classifier]
  ClassifierKind classifier = ClassifierKind::kLogit;
  int hidden = 300;
  TrainConfig train;       // seed field is derived per trial, not read here
  int snapshot_every = 5;  // curve command; 0 means no snapshots

  // [attack]
  AttackKind attack = AttackKind::coordinate_ascent;
  bool attack_both = false;
  AttackParams attack_params;

  // [run]
  int trials = 5;
  int num_test = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "runs/out";

  void validate() const;  // throws std::invalid_argument

  // rho: explicit value, or calibrated from (a, n, d) under the uniform
  // prior; other tasks return their own noise/size parameter.
  double task_param() const;
};

// Plain key = value lines under [section] headers; '#' starts a comment.
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

// Switches the config to the publication-size experiment: n=500, N=500,
// d=1000 clusters, and for the wide net H=1500 with 2000 updates.
void apply_paper_scale(ExperimentConfig& cfg);

// Output-file layout under cfg.out.
std::string dataset_path(const ExperimentConfig& cfg, int trial);
std::string instance_path(const ExperimentConfig& cfg, int trial);
std::string model_path(const ExperimentConfig& cfg, int trial);

// Per-trial classification errors plus the CSV writers. The seed column of a
// per-trial row holds that trial's stream id; the aggregate row says "all"
// and averages whatever strata are defined.
struct TrialErrors {
  int trial = 0;
  double param = 0.0;  // rho, delta, or alphabet size of the trial's instance
  std::string classifier;
  ErrorReport errors;
};

void error_rows_to_csv(const ExperimentConfig& cfg,
                       const std::vector<TrialErrors>& rows, std::ostream& out);

// Commands. Each returns a process exit code: 0 success, 1 run/check
// failure, 2 bad usage. Progress and notices go to `log`.
int cmd_generate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train(const ExperimentConfig& cfg, std::ostream& log);
int cmd_attack(const ExperimentConfig& cfg, std::ostream& log);
int cmd_curve(const ExperimentConfig& cfg, std::ostream& log);
int cmd_bounds(std::istream& inputs, std::ostream& csv, std::ostream& log);
int cmd_verify(const std::string& suite, std::ostream& log);

}  // namespace subpop
