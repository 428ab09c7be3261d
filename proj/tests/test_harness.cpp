#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "subpop/harness.hpp"
#include "test_util.hpp"

using namespace subpop;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

// Fresh scratch directory per test run; removed up front so stale files from
// an aborted run can't leak into assertions.
fs::path scratch_dir(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("subpop_harness_" + leaf);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_logit_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.task = TaskKind::kHypercube;
  cfg.n = 30;
  cfg.N = 20;
  cfg.d = 40;
  cfg.rho = 0.5;
  cfg.classifier = ClassifierKind::kLogit;
  cfg.train.updates = 20;
  cfg.trials = 2;
  cfg.num_test = 50;
  cfg.seed = 3;
  cfg.attack = AttackKind::coordinate_ascent;
  cfg.attack_params.max_targets = 5;
  cfg.out = out;
  return cfg;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (const char ch : text)
    if (ch == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("instance serialization round trips every task kind") {
  RngStream rng(100, 0);
  const Prior uni = uniform_prior();

  const std::vector<std::pair<TaskInstance, MixtureWeights>> cases = {
      {TaskInstance{sample_hc_instance(5, 24, 0.4, rng)},
       sample_weights(uni, 5, rng)},
      {TaskInstance{sample_nsp_instance(4, 16, 0.25, rng)},
       sample_weights(uni, 4, rng)},
      {TaskInstance{sample_la_instance(3, 6, 1.5, rng)},
       sample_weights(uni, 3, rng)},
      {TaskInstance{sample_threshold_instance(12, rng)}, MixtureWeights{{1.0}}},
      {TaskInstance{sample_two_length_instance(10, rng)}, MixtureWeights{{1.0}}},
  };
  for (const auto& [inst, w] : cases) {
    const std::string text = instance_to_text(inst, w);
    auto [inst2, w2] = instance_from_text(text);
    CHECK(task_kind(inst2) == task_kind(inst));
    CHECK(instance_to_text(inst2, w2) == text);
  }
}

TEST_CASE("instance parser rejects malformed input") {
  RngStream rng(100, 1);
  const TaskInstance inst{sample_hc_instance(3, 8, 0.5, rng)};
  const MixtureWeights w = sample_weights(uniform_prior(), 3, rng);
  const std::string good = instance_to_text(inst, w);

  CHECK_THROWS_AS(instance_from_text(""), std::invalid_argument);
  CHECK_THROWS_AS(instance_from_text("junk"), std::invalid_argument);

  // Truncate the body: drop the last line.
  std::string cut = good;
  cut.erase(cut.find_last_of('\n', cut.size() - 2) + 1);
  CHECK_THROWS_AS(instance_from_text(cut), std::invalid_argument);

  // Wrong weight count.
  std::string short_w = good;
  const auto wpos = short_w.find("weights\t");
  const auto wend = short_w.find('\n', wpos);
  std::string line = short_w.substr(wpos, wend - wpos);
  line.erase(line.find_last_of(' '));
  short_w.replace(wpos, wend - wpos, line);
  CHECK_THROWS_AS(instance_from_text(short_w), std::invalid_argument);
}

TEST_CASE("config parser reads sections, comments, and overrides") {
  std::istringstream in(
      "# experiment\n"
      "[task]\n"
      "kind = nsp\n"
      "n = 64\n"
      "N = 32\n"
      "d = 128\n"
      "prior = bimodal\n"
      "delta = 0.3\n"
      "rho = 0.25\n"
      "\n"
      "[classifier]\n"
      "kind = nn   # memorizer\n"
      "updates = 7\n"
      "nesterov = false\n"
      "\n"
      "[attack]\n"
      "kind = gradient_sign\n"
      "probes = 8\n"
      "max_targets = 3\n"
      "\n"
      "[run]\n"
      "trials = 4\n"
      "seed = 18446744073709551615\n"
      "threads = 2\n"
      "out = /tmp/x\n");
  const ExperimentConfig cfg = load_config(in);
  CHECK(cfg.task == TaskKind::kNextSymbol);
  CHECK(cfg.n == 64);
  CHECK(cfg.N == 32);
  CHECK(cfg.d == 128);
  CHECK(cfg.prior == "bimodal");
  CHECK(cfg.delta == 0.3);
  CHECK(cfg.rho.has_value());
  CHECK(*cfg.rho == 0.25);
  CHECK(cfg.classifier == ClassifierKind::kNearest);
  CHECK(cfg.train.updates == 7);
  CHECK(cfg.train.nesterov == false);
  CHECK(cfg.attack == AttackKind::gradient_sign);
  CHECK(cfg.attack_both == false);
  CHECK(cfg.attack_params.probes == 8);
  CHECK(cfg.attack_params.max_targets == 3);
  CHECK(cfg.trials == 4);
  CHECK(cfg.seed == 18446744073709551615ull);
  CHECK(cfg.threads == 2);
  CHECK(cfg.out == "/tmp/x");

  // Untouched keys keep their defaults.
  CHECK(cfg.hidden == 300);
  CHECK(cfg.train.learning_rate == 0.5);
  CHECK(cfg.num_test == 1000);
}

TEST_CASE("config parser pins errors to line numbers") {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      load_config(in);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("[task]\nn = 5\nwat = 1\n") == 3);
  CHECK(line_of("[task]\nn = five\n") == 2);
  CHECK(line_of("[task\nn = 5\n") == 1);
  CHECK(line_of("n = 5\n") == 1);
  CHECK(line_of("[task]\nnonsense line\n") == 2);
  CHECK(line_of("[bogus]\n") == 1);
  CHECK(line_of("[run]\nseed = -4\n") == 2);
  CHECK(line_of("[classifier]\nkind = tree\n") == 2);
  CHECK(line_of("[task]\nkind = checkers\n") == 2);
  CHECK(line_of("[classifier]\nnesterov = maybe\n") == 2);
}

TEST_CASE("attack kind 'both' sets the pair flag") {
  std::istringstream in("[attack]\nkind = both\n");
  const ExperimentConfig cfg = load_config(in);
  CHECK(cfg.attack_both);
}

TEST_CASE("config validation rejects out-of-range values") {
  ExperimentConfig cfg;
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.prior = "gaussian";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.prior = "bimodal";
  cfg.N = 48;  // not a power of two
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.rho = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.threads = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.validate();  // defaults are fine
}

TEST_CASE("task_param resolves the similarity level") {
  ExperimentConfig cfg;
  cfg.rho = 0.4;
  CHECK(cfg.task_param() == 0.4);

  cfg.rho.reset();
  cfg.n = 500;
  cfg.N = 500;
  cfg.d = 1000;
  cfg.a = 50000;
  CHECK(cfg.task_param() ==
        doctest::Approx(0.17390765203).epsilon(1e-9));

  cfg.prior = "bimodal";
  cfg.N = 512;
  CHECK_THROWS_AS(cfg.task_param(), std::invalid_argument);

  cfg.prior = "uniform";
  cfg.task = TaskKind::kNextSymbol;
  cfg.delta = 0.35;
  CHECK(cfg.task_param() == 0.35);
}

TEST_CASE("paper scale override bumps the size knobs") {
  ExperimentConfig cfg;
  cfg.classifier = ClassifierKind::kMlp;
  cfg.hidden = 300;
  cfg.train.updates = 500;
  apply_paper_scale(cfg);
  CHECK(cfg.n == 500);
  CHECK(cfg.N == 500);
  CHECK(cfg.d == 1000);
  CHECK(cfg.hidden == 1500);
  CHECK(cfg.train.updates == 2000);
  CHECK(cfg.train.learning_rate == 0.1);
}

TEST_CASE("error csv layout and aggregate means") {
  ExperimentConfig cfg;
  cfg.task = TaskKind::kHypercube;
  cfg.n = 10;
  cfg.N = 5;
  cfg.d = 8;

  TrialErrors a;
  a.trial = 0;
  a.param = 0.5;
  a.classifier = "logit";
  a.errors.train = {0.0, 0, 10, true};
  a.errors.test = {0.25, 5, 20, true};
  a.errors.represented = {0.125, 2, 16, true};
  a.errors.singletons = {0.5, 2, 4, true};
  TrialErrors b = a;
  b.trial = 1;
  b.errors.test.rate = 0.75;
  b.errors.singletons.defined = false;

  std::ostringstream out;
  error_rows_to_csv(cfg, {a, b}, out);
  CHECK(out.str() ==
        "task,n,N,d,param,classifier,train,test,represented,singletons,seed\n"
        "hc,10,5,8,0.5,logit,0,0.25,0.125,0.5,0\n"
        "hc,10,5,8,0.5,logit,0,0.75,0.125,nan,1\n"
        "hc,10,5,8,0.5,logit,0,0.5,0.125,0.5,all\n");

  std::ostringstream empty;
  error_rows_to_csv(cfg, {}, empty);
  CHECK(empty.str() ==
        "task,n,N,d,param,classifier,train,test,represented,singletons,seed\n");
}

TEST_CASE("bounds command evaluates request lines into csv") {
  std::istringstream in(
      "# header comment\n"
      "nsp_oneshot d=99 delta=0 eps=0\n"
      "\n"
      "dp alpha=0 beta=0 n=4 d=7\n"
      "fano k=8 err=0\n");
  std::ostringstream csv, log;
  CHECK(cmd_bounds(in, csv, log) == 0);
  CHECK(csv.str() ==
        "name,inputs,value,raw,valid,clamped,note\n"
        "nsp_oneshot,d=99 delta=0 eps=0,50,50,1,0,\n"
        "dp,alpha=0 beta=0 n=4 d=7,0,0,1,0,\n"
        "fano,k=8 err=0,3,3,1,0,\n");
}

TEST_CASE("bounds command flags bad input with line numbers") {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    std::ostringstream csv, log;
    try {
      cmd_bounds(in, csv, log);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("fano k=8 err=0\nwat k=2\n") == 2);
  CHECK(line_of("fano k=8\n") == 1);
  CHECK(line_of("fano k=8 err=0 bogus=1\n") == 1);
  CHECK(line_of("fano k=8 err=zero\n") == 1);
  CHECK(line_of("fano k=8 err=0 err=1\n") == 1);
  CHECK(line_of("\n\ngh_product H_X=3 log_Nmax=1 log_Xsize=2 eps=0 alpha=0\n") == 3);
}

TEST_CASE("pipeline runs end to end and reruns byte identically") {
  const fs::path dir1 = scratch_dir("e2e_a");
  const fs::path dir2 = scratch_dir("e2e_b");
  std::ostringstream log;

  ExperimentConfig cfg = tiny_logit_config(dir1.string());
  REQUIRE(cmd_generate(cfg, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  REQUIRE(cmd_attack(cfg, log) == 0);
  cfg.snapshot_every = 10;
  REQUIRE(cmd_curve(cfg, log) == 0);

  const std::vector<std::string> files = {
      "trial_000.data", "trial_000.inst", "trial_001.data", "trial_001.inst",
      "model_000.ckpt", "model_001.ckpt", "errors.csv",     "attacks.csv",
      "curve.csv"};
  for (const std::string& f : files) REQUIRE(fs::exists(dir1 / f));

  // errors.csv: header + one row per trial + aggregate.
  const std::string errors = read_file(dir1 / "errors.csv");
  CHECK(count_lines(errors) == 4);
  CHECK(errors.find(",all\n") != std::string::npos);

  // attacks.csv: header + min(max_targets, K) rows per trial + aggregate.
  int expected_targets = 0;
  for (int t = 0; t < 2; ++t) {
    const auto [data, header] =
        dataset_from_text(read_file(dir1 / ("trial_00" + std::to_string(t) + ".data")));
    expected_targets += std::min(5, data.num_singletons);
  }
  const std::string attacks = read_file(dir1 / "attacks.csv");
  CHECK(count_lines(attacks) == 1 + expected_targets + 1);
  CHECK(attacks.rfind("all,logit,coordinate_ascent,") != std::string::npos);

  // curve.csv: header + snapshots {0,10,20}.
  const std::string curve = read_file(dir1 / "curve.csv");
  CHECK(count_lines(curve) == 4);

  ExperimentConfig cfg2 = tiny_logit_config(dir2.string());
  REQUIRE(cmd_generate(cfg2, log) == 0);
  REQUIRE(cmd_train(cfg2, log) == 0);
  REQUIRE(cmd_attack(cfg2, log) == 0);
  cfg2.snapshot_every = 10;
  REQUIRE(cmd_curve(cfg2, log) == 0);
  for (const std::string& f : files)
    CHECK(read_file(dir2 / f) == read_file(dir1 / f));

  // Trial workers only change scheduling, not results.
  cfg2.threads = 2;
  REQUIRE(cmd_train(cfg2, log) == 0);
  CHECK(read_file(dir2 / "errors.csv") == read_file(dir1 / "errors.csv"));
  CHECK(read_file(dir2 / "model_001.ckpt") == read_file(dir1 / "model_001.ckpt"));

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("aggregate errors row equals the recomputed mean") {
  const fs::path dir = scratch_dir("agg");
  std::ostringstream log;
  ExperimentConfig cfg = tiny_logit_config(dir.string());
  cfg.trials = 3;
  REQUIRE(cmd_generate(cfg, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);

  std::ifstream f(dir / "errors.csv");
  std::string line;
  std::getline(f, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::vector<double> vals;
    std::istringstream cells(line);
    std::string cell;
    int idx = 0;
    while (std::getline(cells, cell, ',')) {
      if (idx >= 6 && idx <= 9) vals.push_back(std::stod(cell));
      ++idx;
    }
    rows.push_back(vals);
  }
  REQUIRE(rows.size() == 4);
  for (int col = 0; col < 4; ++col) {
    const double mean =
        (rows[0][static_cast<std::size_t>(col)] + rows[1][static_cast<std::size_t>(col)] +
         rows[2][static_cast<std::size_t>(col)]) /
        3.0;
    CHECK(rows[3][static_cast<std::size_t>(col)] == doctest::Approx(mean).epsilon(1e-15));
  }
  fs::remove_all(dir);
}

TEST_CASE("training divergence is reported without aborting the run") {
  const fs::path dir = scratch_dir("diverge");
  std::ostringstream log;
  ExperimentConfig cfg = tiny_logit_config(dir.string());
  REQUIRE(cmd_generate(cfg, log) == 0);
  cfg.train.learning_rate = 1e308;
  CHECK(cmd_train(cfg, log) == 1);
  CHECK(log.str().find("trial 0 failed") != std::string::npos);
  CHECK(log.str().find("trial 1 failed") != std::string::npos);
  // The CSV is still written, with just the header.
  CHECK(read_file(dir / "errors.csv") ==
        "task,n,N,d,param,classifier,train,test,represented,singletons,seed\n");
  fs::remove_all(dir);
}

TEST_CASE("commands reject missing inputs and bad combinations") {
  const fs::path dir = scratch_dir("missing");
  std::ostringstream log;
  ExperimentConfig cfg = tiny_logit_config(dir.string());
  CHECK_THROWS_AS(cmd_train(cfg, log), std::runtime_error);  // nothing generated

  cfg.task = TaskKind::kThreshold;
  CHECK_THROWS_AS(cmd_train(cfg, log), std::invalid_argument);
  CHECK_THROWS_AS(cmd_attack(cfg, log), std::invalid_argument);

  cfg.task = TaskKind::kHypercube;
  cfg.classifier = ClassifierKind::kMonotone;
  CHECK_THROWS_AS(cmd_train(cfg, log), std::invalid_argument);

  cfg.classifier = ClassifierKind::kNearest;
  cfg.attack_both = true;
  CHECK_THROWS_AS(cmd_curve(cfg, log), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("trials=0 generates nothing and succeeds") {
  const fs::path dir = scratch_dir("zero");
  std::ostringstream log;
  ExperimentConfig cfg = tiny_logit_config(dir.string());
  cfg.trials = 0;
  CHECK(cmd_generate(cfg, log) == 0);
  CHECK(!fs::exists(dir / "trial_000.data"));
  CHECK(cmd_train(cfg, log) == 0);
  CHECK(read_file(dir / "errors.csv") ==
        "task,n,N,d,param,classifier,train,test,represented,singletons,seed\n");
  fs::remove_all(dir);
}

TEST_CASE("curve with no snapshot interval writes only the header") {
  const fs::path dir = scratch_dir("flatcurve");
  std::ostringstream log;
  ExperimentConfig cfg = tiny_logit_config(dir.string());
  cfg.snapshot_every = 0;
  REQUIRE(cmd_curve(cfg, log) == 0);
  CHECK(read_file(dir / "curve.csv") ==
        "step,train,represented,singletons,recovery\n");
  fs::remove_all(dir);
}

TEST_CASE("nn and monotone classifier paths run without checkpoints") {
  const fs::path dir = scratch_dir("oracle");
  std::ostringstream log;
  ExperimentConfig cfg = tiny_logit_config(dir.string());
  cfg.classifier = ClassifierKind::kNearest;
  REQUIRE(cmd_generate(cfg, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  CHECK(!fs::exists(dir / "model_000.ckpt"));
  const std::string errors = read_file(dir / "errors.csv");
  CHECK(errors.find(",nn,") != std::string::npos);

  // The per-target oracle must be cracked exactly by both attacks.
  cfg.classifier = ClassifierKind::kMonotone;
  cfg.attack_both = true;
  REQUIRE(cmd_attack(cfg, log) == 0);
  const std::string attacks = read_file(dir / "attacks.csv");
  CHECK(attacks.find("all,monotone,coordinate_ascent,,40,0,0\n") != std::string::npos);
  CHECK(attacks.find("all,monotone,gradient_sign,,40,0,0\n") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("verify suites run clean and reject unknown names") {
  std::ostringstream log;
  CHECK(cmd_verify("prob", log) == 0);
  CHECK(log.str().find("FAIL") == std::string::npos);
  std::ostringstream log2;
  CHECK(cmd_verify("nope", log2) == 2);
}

TEST_CASE("desk logit regression fixture reproduces by seed") {
  // Reference run recorded from the desk-size preset (n=100, N=100, d=300,
  // uniform prior, a=50000, logit with library defaults, seed 1, trial 0).
  const fs::path dir = scratch_dir("fixture");
  std::ostringstream log;
  ExperimentConfig cfg;
  cfg.n = 100;
  cfg.N = 100;
  cfg.d = 300;
  cfg.a = 50000;
  cfg.classifier = ClassifierKind::kLogit;
  cfg.trials = 1;
  cfg.num_test = 500;
  cfg.seed = 1;
  cfg.out = dir.string();
  REQUIRE(cmd_generate(cfg, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  const std::string errors = read_file(dir / "errors.csv");
  CHECK(errors.find("hc,100,100,300,0.30184295484018153,logit,0,"
                    "0.45400000000000001,0,0.002,0\n") != std::string::npos);
  fs::remove_all(dir);
}
