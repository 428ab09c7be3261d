#include "subpop/harness.hpp"

#include <atomic>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <utility>

#include "subpop/info.hpp"
#include "subpop/prob.hpp"

namespace subpop {
namespace {

namespace fs = std::filesystem;

// Stream-id layout. Trial i of generation owns stream i outright; every other
// stage gets its own base so no two stages ever share a stream.
constexpr std::uint64_t kEvalBase = std::uint64_t{1} << 40;
constexpr std::uint64_t kTrainBase = std::uint64_t{2} << 40;
constexpr std::uint64_t kAttackBase = std::uint64_t{3} << 40;  // + 2*trial + kind
constexpr std::uint64_t kCurveEvalBase = std::uint64_t{4} << 40;
constexpr std::uint64_t kCurveAttackBase = std::uint64_t{5} << 40;
constexpr std::uint64_t kCoinBase = std::uint64_t{6} << 40;

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long long r = std::stoll(v, &pos);
    if (pos != v.size() || r < INT_MIN || r > INT_MAX) throw std::exception();
    return static_cast<int>(r);
  } catch (...) {
    throw ConfigError(line, "expected an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::exception();
    const std::uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::exception();
    return r;
  } catch (...) {
    throw ConfigError(line, "expected an unsigned integer, got '" + v + "'");
  }
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::exception();
    return r;
  } catch (...) {
    throw ConfigError(line, "expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(line, "expected true or false, got '" + v + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f.good()) throw std::runtime_error("failed to write " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

Prior make_prior(const ExperimentConfig& cfg) {
  if (cfg.prior == "uniform") return uniform_prior();
  int bits = 0;
  while ((1 << bits) < cfg.N) ++bits;
  return build_bimodal_prior(bits, cfg.prior == "bimodal_appendix");
}

TaskInstance sample_instance(const ExperimentConfig& cfg, RngStream& rng) {
  switch (cfg.task) {
    case TaskKind::kHypercube:
      return sample_hc_instance(cfg.N, cfg.d, cfg.task_param(), rng);
    case TaskKind::kNextSymbol:
      return sample_nsp_instance(cfg.N, cfg.d, cfg.delta, rng);
    case TaskKind::kLargeAlphabet:
      return sample_la_instance(cfg.N, cfg.d, cfg.alphabet_factor, rng);
    case TaskKind::kThreshold:
      return sample_threshold_instance(cfg.d, rng);
    case TaskKind::kTwoLength:
      return sample_two_length_instance(cfg.d, rng);
  }
  throw std::logic_error("unreachable task kind");
}

// rho, delta, or alphabet size; the "param" column of result files.
double instance_param(const TaskInstance& inst) {
  if (const auto* hc = std::get_if<HCInstance>(&inst)) return hc->rho;
  if (const auto* nsp = std::get_if<NSPInstance>(&inst)) return nsp->delta;
  if (const auto* la = std::get_if<LAInstance>(&inst))
    return static_cast<double>(la->alphabet);
  return 0.0;
}

struct LoadedTrial {
  TaskInstance inst;
  MixtureWeights weights;
  Dataset data;
  DatasetHeader header;
};

LoadedTrial load_trial(const ExperimentConfig& cfg, int trial) {
  auto [inst, weights] = instance_from_text(read_text_file(instance_path(cfg, trial)));
  auto [data, header] = dataset_from_text(read_text_file(dataset_path(cfg, trial)));
  if (header.kind != cfg.task || header.n != cfg.n || header.d != cfg.d ||
      (task_subpop_count(inst) > 1 && header.N != cfg.N)) {
    throw std::runtime_error(dataset_path(cfg, trial) +
                             " does not match the config (was it generated "
                             "with different settings?)");
  }
  LoadedTrial t{std::move(inst), std::move(weights), std::move(data), header};
  return t;
}

void require_exists(const std::string& path) {
  if (!fs::exists(path))
    throw std::runtime_error("missing " + path + " (run generate/train first)");
}

// Dispatches trials to a small worker pool. fn must not throw.
void run_trials(int threads, int trials, const std::function<void(int)>& fn) {
  if (threads <= 1 || trials <= 1) {
    for (int i = 0; i < trials; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  const int workers = std::min(threads, trials);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void require_trainable(const ExperimentConfig& cfg) {
  const bool bit_task = cfg.task == TaskKind::kHypercube;
  switch (cfg.classifier) {
    case ClassifierKind::kLogit:
    case ClassifierKind::kMlp:
    case ClassifierKind::kBaseline:
      if (!bit_task)
        throw std::invalid_argument(
            std::string(classifier_kind_name(cfg.classifier)) +
            " works on the hc task only");
      return;
    case ClassifierKind::kNearest:
      if (cfg.task == TaskKind::kThreshold || cfg.task == TaskKind::kTwoLength)
        throw std::invalid_argument("the nn classifier has no single-population variant");
      return;
    case ClassifierKind::kMonotone:
      throw std::invalid_argument("the monotone oracle is attack-only; nothing to train");
  }
}

int attack_kind_index(AttackKind kind) {
  return kind == AttackKind::coordinate_ascent ? 0 : 1;
}

// Per-target oracle variant of attack_singletons: each singleton is attacked
// through a MonotoneOracle planted with its own bits, giving the attacks a
// reference surface they must crack exactly.
AttackReport attack_singletons_monotone(AttackKind kind,
                                        const AttackParams& params,
                                        const Dataset& data, int d, int trial,
                                        RngStream& rng) {
  AttackReport report;
  for (const std::size_t idx : pick_singleton_targets(data, params.max_targets, rng)) {
    const LabeledExample& ex = data.examples[idx];
    const BitString& truth = std::get<BitString>(ex.features);
    const MonotoneOracle oracle(truth, ex.label, std::max(2, data.num_subpops));
    BitString estimate;
    if (kind == AttackKind::coordinate_ascent) {
      estimate = coordinate_ascent_attack(
          oracle, ex.label, d, params.iterations > 0 ? params.iterations : 2 * d, rng);
    } else {
      estimate = gradient_sign_attack(oracle, ex.label, d, params.probes, rng);
    }
    const int errs = static_cast<int>(hamming(estimate, truth));
    report.targets.push_back({trial, "monotone", attack_kind_name(kind),
                              ex.subpop + 1, d, errs,
                              static_cast<double>(errs) / static_cast<double>(d)});
  }
  return report;
}

}  // namespace

const char* classifier_kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogit: return "logit";
    case ClassifierKind::kMlp: return "mlp";
    case ClassifierKind::kNearest: return "nn";
    case ClassifierKind::kBaseline: return "baseline";
    case ClassifierKind::kMonotone: return "monotone";
  }
  return "?";
}

ClassifierKind classifier_kind_from_name(const std::string& name) {
  if (name == "logit") return ClassifierKind::kLogit;
  if (name == "mlp") return ClassifierKind::kMlp;
  if (name == "nn") return ClassifierKind::kNearest;
  if (name == "baseline") return ClassifierKind::kBaseline;
  if (name == "monotone") return ClassifierKind::kMonotone;
  throw std::invalid_argument("unknown classifier kind: " + name);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (n < 1) fail("n must be at least 1");
  if (N < 1) fail("N must be at least 1");
  if (d < 1) fail("d must be at least 1");
  if (prior != "uniform" && prior != "bimodal" && prior != "bimodal_appendix")
    fail("prior must be uniform, bimodal, or bimodal_appendix");
  if (prior != "uniform") {
    if (N < 4 || (N & (N - 1)) != 0)
      fail("bimodal priors need N to be a power of two, at least 4");
  }
  if (!(a > 0)) fail("a must be positive");
  if (rho && !(*rho >= 0.0 && *rho <= 1.0)) fail("rho must lie in [0, 1]");
  if (!(delta >= 0.0 && delta < 1.0)) fail("delta must lie in [0, 1)");
  if (!(alphabet_factor > 0)) fail("alphabet_factor must be positive");
  if (hidden < 1) fail("hidden must be at least 1");
  train.validate();
  if (snapshot_every < 0) fail("snapshot_every must be nonnegative");
  if (attack_params.iterations < 0) fail("iterations must be nonnegative");
  if (attack_params.probes < 1) fail("probes must be at least 1");
  if (attack_params.max_targets < 1) fail("max_targets must be at least 1");
  if (trials < 0) fail("trials must be nonnegative");
  if (num_test < 1) fail("num_test must be at least 1");
  if (threads < 1) fail("threads must be at least 1");
  if (out.empty()) fail("out must not be empty");
}

double ExperimentConfig::task_param() const {
  switch (task) {
    case TaskKind::kHypercube: {
      if (rho) return *rho;
      if (prior != "uniform")
        throw std::invalid_argument(
            "rho must be given explicitly when the prior is not uniform");
      const double mu1 = std::pow(1.0 - 1.0 / N, n - 1);
      return rho_for(n, mu1, a, d);
    }
    case TaskKind::kNextSymbol:
      return delta;
    case TaskKind::kLargeAlphabet:
      return alphabet_factor;
    default:
      return 0.0;
  }
}

ExperimentConfig load_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "task" && section != "classifier" && section != "attack" &&
          section != "run")
        throw ConfigError(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError(lineno, "expected key = value");
    if (section.empty())
      throw ConfigError(lineno, "key '" + key + "' appears before any [section]");

    try {
      if (section == "task") {
        if (key == "kind") cfg.task = task_kind_from_name(val);
        else if (key == "n") cfg.n = to_int(val, lineno);
        else if (key == "N") cfg.N = to_int(val, lineno);
        else if (key == "d") cfg.d = to_int(val, lineno);
        else if (key == "prior") cfg.prior = val;
        else if (key == "a") cfg.a = to_double(val, lineno);
        else if (key == "rho") cfg.rho = to_double(val, lineno);
        else if (key == "delta") cfg.delta = to_double(val, lineno);
        else if (key == "alphabet_factor") cfg.alphabet_factor = to_double(val, lineno);
        else throw ConfigError(lineno, "unknown key '" + key + "' in [task]");
      } else if (section == "classifier") {
        if (key == "kind") cfg.classifier = classifier_kind_from_name(val);
        else if (key == "hidden") cfg.hidden = to_int(val, lineno);
        else if (key == "learning_rate") cfg.train.learning_rate = to_double(val, lineno);
        else if (key == "momentum") cfg.train.momentum = to_double(val, lineno);
        else if (key == "nesterov") cfg.train.nesterov = to_bool(val, lineno);
        else if (key == "updates") cfg.train.updates = to_int(val, lineno);
        else if (key == "lr_decay") cfg.train.lr_decay = to_double(val, lineno);
        else if (key == "init_scale") cfg.train.init_scale = to_double(val, lineno);
        else if (key == "snapshot_every") cfg.snapshot_every = to_int(val, lineno);
        else throw ConfigError(lineno, "unknown key '" + key + "' in [classifier]");
      } else if (section == "attack") {
        if (key == "kind") {
          if (val == "both") {
            cfg.attack_both = true;
            cfg.attack = AttackKind::coordinate_ascent;
          } else {
            cfg.attack_both = false;
            cfg.attack = attack_kind_from_name(val);
          }
        } else if (key == "iterations") {
          cfg.attack_params.iterations = to_int(val, lineno);
        } else if (key == "probes") {
          cfg.attack_params.probes = to_int(val, lineno);
        } else if (key == "max_targets") {
          cfg.attack_params.max_targets =
              static_cast<std::size_t>(to_int(val, lineno));
        } else {
          throw ConfigError(lineno, "unknown key '" + key + "' in [attack]");
        }
      } else {  // run
        if (key == "trials") cfg.trials = to_int(val, lineno);
        else if (key == "num_test") cfg.num_test = to_int(val, lineno);
        else if (key == "seed") cfg.seed = to_u64(val, lineno);
        else if (key == "threads") cfg.threads = to_int(val, lineno);
        else if (key == "out") cfg.out = val;
        else throw ConfigError(lineno, "unknown key '" + key + "' in [run]");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(lineno, e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::invalid_argument("cannot open config file: " + path);
  return load_config(f);
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.n = 500;
  cfg.N = 500;
  cfg.d = 1000;
  cfg.a = 50000.0;
  if (cfg.classifier == ClassifierKind::kMlp) {
    cfg.hidden = 1500;
    cfg.train.updates = 2000;
    cfg.train.learning_rate = 0.1;
  } else if (cfg.classifier == ClassifierKind::kLogit) {
    cfg.train.updates = 50;
    cfg.train.learning_rate = 0.5;
  }
}

std::string dataset_path(const ExperimentConfig& cfg, int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03d.data", trial);
  return cfg.out + "/" + buf;
}

std::string instance_path(const ExperimentConfig& cfg, int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03d.inst", trial);
  return cfg.out + "/" + buf;
}

std::string model_path(const ExperimentConfig& cfg, int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "model_%03d.ckpt", trial);
  return cfg.out + "/" + buf;
}

void error_rows_to_csv(const ExperimentConfig& cfg,
                       const std::vector<TrialErrors>& rows, std::ostream& out) {
  out << "task,n,N,d,param,classifier,train,test,represented,singletons,seed\n";
  auto cell = [](const StratumError& s) { return s.defined ? g17(s.rate) : "nan"; };
  const std::string head = std::string(task_kind_name(cfg.task)) + "," +
                           std::to_string(cfg.n) + "," + std::to_string(cfg.N) +
                           "," + std::to_string(cfg.d) + ",";
  for (const TrialErrors& r : rows) {
    out << head << g17(r.param) << "," << r.classifier << ","
        << cell(r.errors.train) << "," << cell(r.errors.test) << ","
        << cell(r.errors.represented) << "," << cell(r.errors.singletons) << ","
        << r.trial << "\n";
  }
  if (rows.empty()) return;

  auto mean_of = [&](StratumError ErrorReport::* stratum) {
    double sum = 0.0;
    int defined = 0;
    for (const TrialErrors& r : rows) {
      const StratumError& s = r.errors.*stratum;
      if (s.defined) {
        sum += s.rate;
        ++defined;
      }
    }
    return defined > 0 ? g17(sum / defined) : std::string("nan");
  };
  double param_sum = 0.0;
  for (const TrialErrors& r : rows) param_sum += r.param;
  out << head << g17(param_sum / static_cast<double>(rows.size())) << ","
      << rows.front().classifier << "," << mean_of(&ErrorReport::train) << ","
      << mean_of(&ErrorReport::test) << "," << mean_of(&ErrorReport::represented)
      << "," << mean_of(&ErrorReport::singletons) << ",all\n";
}

int cmd_generate(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  fs::create_directories(cfg.out);
  const Prior prior = make_prior(cfg);
  for (int i = 0; i < cfg.trials; ++i) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
    const TaskInstance inst = sample_instance(cfg, rng);
    MixtureWeights weights;
    if (task_subpop_count(inst) == 1) {
      weights.weights = {1.0};
    } else {
      weights = sample_weights(prior, cfg.N, rng);
    }
    const Dataset data = generate_dataset(inst, weights, cfg.n, rng);
    write_text_file(instance_path(cfg, i), instance_to_text(inst, weights));
    write_text_file(dataset_path(cfg, i),
                    dataset_to_text(data, cfg.task, task_dim(inst),
                                    instance_param(inst),
                                    static_cast<std::uint64_t>(i)));
    log << "generate: trial " << i << " -> " << dataset_path(cfg, i) << " ("
        << data.size() << " examples, " << data.num_singletons
        << " singletons)\n";
  }
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  require_trainable(cfg);
  for (int i = 0; i < cfg.trials; ++i) {
    require_exists(dataset_path(cfg, i));
    require_exists(instance_path(cfg, i));
  }

  struct Outcome {
    bool ok = false;
    std::string message;
    double param = 0.0;
    ErrorReport errors;
    std::string notes;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(cfg.trials));

  run_trials(cfg.threads, cfg.trials, [&](int i) {
    Outcome& res = outcomes[static_cast<std::size_t>(i)];
    try {
      const LoadedTrial t = load_trial(cfg, i);
      const int classes = task_subpop_count(t.inst);
      RngStream coin(cfg.seed, kCoinBase + static_cast<std::uint64_t>(i));
      std::unique_ptr<ProbClassifier> clf;
      TrainConfig tc = cfg.train;
      tc.seed = RngStream(cfg.seed, kTrainBase + static_cast<std::uint64_t>(i)).next_u64();
      switch (cfg.classifier) {
        case ClassifierKind::kLogit: {
          auto model = std::make_unique<LogitModel>(train_logit(t.data, classes, tc));
          std::ofstream ck(model_path(cfg, i), std::ios::binary);
          save_model(*model, ck);
          if (!ck.good()) throw std::runtime_error("failed to write " + model_path(cfg, i));
          clf = std::move(model);
          break;
        }
        case ClassifierKind::kMlp: {
          auto model = std::make_unique<MlpModel>(
              train_mlp(t.data, classes, cfg.hidden, tc));
          std::ofstream ck(model_path(cfg, i), std::ios::binary);
          save_model(*model, ck);
          if (!ck.good()) throw std::runtime_error("failed to write " + model_path(cfg, i));
          clf = std::move(model);
          break;
        }
        case ClassifierKind::kNearest:
          if (cfg.task == TaskKind::kHypercube)
            clf = std::make_unique<NnHcClassifier>(&t.data, classes);
          else if (cfg.task == TaskKind::kNextSymbol)
            clf = std::make_unique<NspClassifier>(&t.data, &coin);
          else
            clf = std::make_unique<LaClassifier>(&t.data, classes);
          break;
        case ClassifierKind::kBaseline:
          clf = std::make_unique<BaselineHcClassifier>(
              &t.data, classes, std::get<HCInstance>(t.inst).rho);
          break;
        case ClassifierKind::kMonotone:
          throw std::logic_error("unreachable");
      }
      RngStream eval_rng(cfg.seed, kEvalBase + static_cast<std::uint64_t>(i));
      res.errors = evaluate_errors(*clf, t.inst, t.weights, t.data,
                                   cfg.num_test, eval_rng);
      res.param = instance_param(t.inst);
      res.ok = true;
      std::ostringstream note;
      note << "train: trial " << i << " " << classifier_kind_name(cfg.classifier)
           << " train=" << g17(res.errors.train.rate)
           << " test=" << g17(res.errors.test.rate) << "\n";
      res.notes = note.str();
    } catch (const std::exception& e) {
      res.message = e.what();
    }
  });

  std::vector<TrialErrors> rows;
  bool all_ok = true;
  for (int i = 0; i < cfg.trials; ++i) {
    const Outcome& res = outcomes[static_cast<std::size_t>(i)];
    if (res.ok) {
      log << res.notes;
      rows.push_back({i, res.param, classifier_kind_name(cfg.classifier), res.errors});
    } else {
      all_ok = false;
      log << "train: trial " << i << " failed: " << res.message
          << " (excluded from results)\n";
    }
  }
  std::ostringstream csv;
  error_rows_to_csv(cfg, rows, csv);
  write_text_file(cfg.out + "/errors.csv", csv.str());
  log << "train: wrote " << cfg.out << "/errors.csv (" << rows.size()
      << " of " << cfg.trials << " trials)\n";
  return all_ok ? 0 : 1;
}

int cmd_attack(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.task != TaskKind::kHypercube)
    throw std::invalid_argument("attacks reconstruct bit features; use the hc task");
  const bool needs_checkpoint = cfg.classifier == ClassifierKind::kLogit ||
                                cfg.classifier == ClassifierKind::kMlp;
  for (int i = 0; i < cfg.trials; ++i) {
    require_exists(dataset_path(cfg, i));
    if (needs_checkpoint) require_exists(model_path(cfg, i));
  }
  std::vector<AttackKind> kinds;
  if (cfg.attack_both) {
    kinds = {AttackKind::coordinate_ascent, AttackKind::gradient_sign};
  } else {
    kinds = {cfg.attack};
  }

  struct Outcome {
    bool failed = false;
    std::string message;
    std::vector<AttackReport> reports;
    std::string notes;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(cfg.trials));

  run_trials(cfg.threads, cfg.trials, [&](int i) {
    Outcome& res = outcomes[static_cast<std::size_t>(i)];
    try {
      auto [data, header] = dataset_from_text(read_text_file(dataset_path(cfg, i)));
      if (header.kind != cfg.task || header.d != cfg.d)
        throw std::runtime_error(dataset_path(cfg, i) + " does not match the config");
      if (data.num_singletons == 0) {
        res.notes = "attack: trial " + std::to_string(i) +
                    " has no singletons; skipped\n";
        return;
      }
      std::unique_ptr<ProbClassifier> clf;
      if (needs_checkpoint) {
        std::ifstream ck(model_path(cfg, i), std::ios::binary);
        clf = load_model(ck);
      } else if (cfg.classifier == ClassifierKind::kNearest) {
        clf = std::make_unique<NnHcClassifier>(&data, data.num_subpops);
      } else if (cfg.classifier == ClassifierKind::kBaseline) {
        clf = std::make_unique<BaselineHcClassifier>(&data, data.num_subpops,
                                                     header.param);
      }
      std::ostringstream note;
      for (const AttackKind kind : kinds) {
        RngStream rng(cfg.seed,
                      kAttackBase + 2 * static_cast<std::uint64_t>(i) +
                          static_cast<std::uint64_t>(attack_kind_index(kind)));
        AttackReport rep;
        if (cfg.classifier == ClassifierKind::kMonotone) {
          rep = attack_singletons_monotone(kind, cfg.attack_params, data,
                                           header.d, i, rng);
        } else {
          rep = attack_singletons(*clf, classifier_kind_name(cfg.classifier),
                                  kind, cfg.attack_params, data, header.d, i, rng);
        }
        note << "attack: trial " << i << " " << attack_kind_name(kind) << " on "
             << rep.targets.size() << " singletons, recovery error "
             << g17(rep.recovery_error_percent()) << "%\n";
        res.reports.push_back(std::move(rep));
      }
      res.notes = note.str();
    } catch (const std::exception& e) {
      res.failed = true;
      res.message = e.what();
    }
  });

  AttackReport combined;
  bool all_ok = true;
  for (int i = 0; i < cfg.trials; ++i) {
    const Outcome& res = outcomes[static_cast<std::size_t>(i)];
    if (res.failed) {
      all_ok = false;
      log << "attack: trial " << i << " failed: " << res.message << "\n";
      continue;
    }
    log << res.notes;
    for (const AttackReport& rep : res.reports)
      combined.targets.insert(combined.targets.end(), rep.targets.begin(),
                              rep.targets.end());
  }
  fs::create_directories(cfg.out);
  std::ostringstream csv;
  attack_report_to_csv(combined, csv);
  write_text_file(cfg.out + "/attacks.csv", csv.str());
  log << "attack: wrote " << cfg.out << "/attacks.csv ("
      << combined.targets.size() << " targets)\n";
  if (!combined.targets.empty())
    log << "attack: overall recovery error "
        << g17(combined.recovery_error_percent()) << "%\n";
  return all_ok ? 0 : 1;
}

int cmd_curve(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.task != TaskKind::kHypercube)
    throw std::invalid_argument("curves need the hc task");
  if (cfg.classifier != ClassifierKind::kLogit &&
      cfg.classifier != ClassifierKind::kMlp)
    throw std::invalid_argument("curves track a trained model; use logit or mlp");
  if (cfg.attack_both)
    throw std::invalid_argument("curves need a single attack kind, not both");
  fs::create_directories(cfg.out);

  std::ostringstream csv;
  csv << "step,train,represented,singletons,recovery\n";

  int exit_code = 0;
  if (cfg.snapshot_every > 0) {
    // Same streams as cmd_generate trial 0, so the curve runs on the dataset
    // that generate would have written.
    RngStream gen_rng(cfg.seed, 0);
    const TaskInstance inst = sample_instance(cfg, gen_rng);
    const Prior prior = make_prior(cfg);
    const MixtureWeights weights = sample_weights(prior, cfg.N, gen_rng);
    const Dataset data = generate_dataset(inst, weights, cfg.n, gen_rng);
    const int classes = task_subpop_count(inst);
    const int dim = task_dim(inst);

    std::vector<int> steps;
    for (int s = 0; s < cfg.train.updates; s += cfg.snapshot_every)
      steps.push_back(s);
    steps.push_back(cfg.train.updates);

    TrainConfig tc = cfg.train;
    tc.seed = RngStream(cfg.seed, kTrainBase).next_u64();
    std::unique_ptr<LogitTrainer> logit;
    std::unique_ptr<MlpTrainer> mlp;
    if (cfg.classifier == ClassifierKind::kLogit)
      logit = std::make_unique<LogitTrainer>(data, classes, tc);
    else
      mlp = std::make_unique<MlpTrainer>(data, classes, cfg.hidden, tc);

    int done = 0;
    std::uint64_t snap = 0;
    for (const int s : steps) {
      try {
        if (logit) logit->step(s - done);
        else mlp->step(s - done);
      } catch (const std::exception& e) {
        log << "curve: training failed at step " << done << ": " << e.what() << "\n";
        exit_code = 1;
        break;
      }
      done = s;
      const ProbClassifier& model =
          logit ? static_cast<const ProbClassifier&>(logit->model())
                : static_cast<const ProbClassifier&>(mlp->model());
      RngStream eval_rng(cfg.seed, kCurveEvalBase + snap);
      const ErrorReport er =
          evaluate_errors(model, inst, weights, data, cfg.num_test, eval_rng);
      RngStream attack_rng(cfg.seed, kCurveAttackBase + snap);
      const AttackReport rep = attack_singletons(
          model, classifier_kind_name(cfg.classifier), cfg.attack,
          cfg.attack_params, data, dim, static_cast<int>(snap), attack_rng);
      const double recovery = rep.targets.empty()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : rep.recovery_error_percent();
      csv << s << "," << g17(er.train.rate) << "," << g17(er.represented.rate)
          << "," << g17(er.singletons.rate) << "," << g17(recovery) << "\n";
      log << "curve: step " << s << " train=" << g17(er.train.rate)
          << " singletons=" << g17(er.singletons.rate) << " recovery="
          << g17(recovery) << "%\n";
      ++snap;
    }
  }
  write_text_file(cfg.out + "/curve.csv", csv.str());
  log << "curve: wrote " << cfg.out << "/curve.csv\n";
  return exit_code;
}

namespace {

// One "name key=value ..." request line for cmd_bounds.
BoundResult eval_bound_line(const std::string& name,
                            std::map<std::string, std::string>& kv, int lineno) {
  auto take = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw ConfigError(lineno, std::string("missing ") + key + " for " + name);
    const double v = to_double(it->second, lineno);
    kv.erase(it);
    return v;
  };
  auto take_int = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw ConfigError(lineno, std::string("missing ") + key + " for " + name);
    const int v = to_int(it->second, lineno);
    kv.erase(it);
    return v;
  };
  auto take_or = [&](const char* key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const double v = to_double(it->second, lineno);
    kv.erase(it);
    return v;
  };

  BoundResult result;
  try {
    if (name == "fano") {
      const int k = take_int("k");
      result = fano_lower(k, take("err"));
    } else if (name == "nsp_oneshot") {
      const int d = take_int("d");
      const double delta = take("delta");
      result = nsp_oneshot_bound(d, delta, take("eps"));
    } else if (name == "hc_comm") {
      const int k = take_int("k");
      const int d = take_int("d");
      const int n = take_int("n");
      const double c = take("c");
      result = hc_comm_bound(k, d, n, c, take("eps"));
    } else if (name == "dp") {
      const double alpha = take("alpha");
      const double beta = take("beta");
      const int n = take_int("n");
      result = dp_info_bound(alpha, beta, n, take_int("d"));
    } else if (name == "gh_product") {
      const double hx = take("H_X");
      const double ln = take("log_Nmax");
      const double lx = take("log_Xsize");
      const double eps = take("eps");
      result = gh_product_bound(hx, ln, lx, eps, take("alpha"));
    } else if (name == "gh_alpha") {
      const double c = take("c");
      const double p = take("p");
      const int d = take_int("d");
      const double k1 = take_or("k1", 0.56);
      result = gh_alpha_lower(c, p, d, k1, take_or("k2", 0.56));
    } else {
      throw ConfigError(lineno, "unknown bound '" + name + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(lineno, e.what());
  }
  if (!kv.empty())
    throw ConfigError(lineno, "unknown key '" + kv.begin()->first + "' for " + name);
  return result;
}

}  // namespace

int cmd_bounds(std::istream& inputs, std::ostream& csv, std::ostream& log) {
  csv << "name,inputs,value,raw,valid,clamped,note\n";
  std::string raw;
  int lineno = 0;
  int rows = 0;
  while (std::getline(inputs, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    std::string name;
    if (!(words >> name)) continue;
    std::map<std::string, std::string> kv;
    std::vector<std::string> given;
    std::string token;
    while (words >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == token.size())
        throw ConfigError(lineno, "expected key=value, got '" + token + "'");
      if (!kv.emplace(token.substr(0, eq), token.substr(eq + 1)).second)
        throw ConfigError(lineno, "duplicate key '" + token.substr(0, eq) + "'");
      given.push_back(token);
    }
    const BoundResult r = eval_bound_line(name, kv, lineno);
    std::string inputs_cell;
    for (const std::string& g : given) {
      if (!inputs_cell.empty()) inputs_cell += ' ';
      inputs_cell += g;
    }
    csv << name << "," << inputs_cell << "," << g17(r.value) << "," << g17(r.raw)
        << "," << (r.valid ? 1 : 0) << "," << (r.clamped ? 1 : 0) << ","
        << r.note << "\n";
    ++rows;
  }
  log << "bounds: evaluated " << rows << " request(s)\n";
  return 0;
}

}  // namespace subpop
