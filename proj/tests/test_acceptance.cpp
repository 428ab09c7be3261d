// Acceptance gate: twelve end-to-end criteria, one pass/fail line each.
// Every tolerance is pinned here in code. Run with no arguments for the full
// gate, or pass criterion numbers to run a subset, e.g. "test_acceptance 5 9".

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "subpop/harness.hpp"
#include "subpop/info.hpp"
#include "subpop/prob.hpp"

using namespace subpop;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

fs::path scratch(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("subpop_accept_" + leaf);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

// Aggregate row of errors.csv: train, test, represented, singletons rates.
struct AggErrors {
  double train = -1, test = -1, represented = -1, singletons = -1;
};

AggErrors read_aggregate_errors(const fs::path& csv) {
  std::istringstream in(slurp(csv));
  std::string line;
  AggErrors agg;
  while (std::getline(in, line)) {
    if (line.size() < 4 || line.substr(line.size() - 4) != ",all") continue;
    const auto cells = split(line, ',');
    agg.train = std::stod(cells[6]);
    agg.test = std::stod(cells[7]);
    agg.represented = std::stod(cells[8]);
    agg.singletons = std::stod(cells[9]);
  }
  return agg;
}

// Aggregate recovery error (percent) for a (classifier, attack) pair.
double read_aggregate_recovery(const fs::path& csv, const std::string& clf,
                               const std::string& attack) {
  std::istringstream in(slurp(csv));
  std::string line;
  const std::string prefix = "all," + clf + "," + attack + ",";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) != 0) continue;
    const auto cells = split(line, ',');
    return 100.0 * std::stod(cells.back());
  }
  return -1.0;
}

ExperimentConfig paper_logit_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.n = 500;
  cfg.N = 500;
  cfg.d = 1000;
  cfg.a = 50000;
  cfg.classifier = ClassifierKind::kLogit;
  cfg.train.learning_rate = 0.5;
  cfg.train.updates = 50;
  cfg.trials = 5;
  cfg.num_test = 1000;
  cfg.seed = 1;
  cfg.attack = AttackKind::coordinate_ascent;
  cfg.out = out;
  return cfg;
}

// 1. Full-scale logistic-regression row: train <= 0.5%, test within 6 points
//    of 36.9%, represented <= 6%, coordinate-ascent recovery <= 2%, in <= 15
//    minutes single-threaded.
Result criterion_1() {
  const double t0 = now_s();
  const fs::path dir = scratch("c1");
  std::ostringstream log;
  const ExperimentConfig cfg = paper_logit_config(dir.string());
  if (cmd_generate(cfg, log) != 0 || cmd_train(cfg, log) != 0 ||
      cmd_attack(cfg, log) != 0)
    return {false, "pipeline command failed"};
  const AggErrors e = read_aggregate_errors(dir / "errors.csv");
  const double rec =
      read_aggregate_recovery(dir / "attacks.csv", "logit", "coordinate_ascent");
  const double dt = now_s() - t0;
  fs::remove_all(dir);
  const bool pass = e.train <= 0.005 && std::fabs(e.test - 0.369) <= 0.06 &&
                    e.represented <= 0.06 && rec >= 0.0 && rec <= 2.0 &&
                    dt <= 900.0;
  return {pass, fmt("train %.4f (<=0.005) test %.4f (0.369 +-0.06) repr %.4f "
                    "(<=0.06) recovery %.2f%% (<=2%%) in %.0fs (<=900)",
                    e.train, e.test, e.represented, rec, dt)};
}

// 2. Net surrogate at desk scale (n=100 d=300 H=300, 500 updates): >= 90% of
//    singleton bits recovered by the bit-vote attack, well under 5 minutes.
Result criterion_2() {
  const double t0 = now_s();
  const fs::path dir = scratch("c2");
  std::ostringstream log;
  ExperimentConfig cfg;
  cfg.n = 100;
  cfg.N = 100;
  cfg.d = 300;
  cfg.a = 50000;
  cfg.classifier = ClassifierKind::kMlp;
  cfg.hidden = 300;
  cfg.train.learning_rate = 0.1;
  cfg.train.updates = 500;
  cfg.train.init_scale = 0.1;
  cfg.trials = 3;
  cfg.num_test = 500;
  cfg.seed = 1;
  cfg.attack = AttackKind::gradient_sign;
  cfg.out = dir.string();
  if (cmd_generate(cfg, log) != 0 || cmd_train(cfg, log) != 0 ||
      cmd_attack(cfg, log) != 0)
    return {false, "pipeline command failed"};
  const AggErrors e = read_aggregate_errors(dir / "errors.csv");
  const double rec =
      read_aggregate_recovery(dir / "attacks.csv", "mlp", "gradient_sign");
  const double dt = now_s() - t0;
  fs::remove_all(dir);
  const double bits = 100.0 - rec;
  const bool pass = e.train <= 0.005 && rec >= 0.0 && bits >= 90.0 && dt <= 300.0;
  return {pass, fmt("train %.4f (<=0.005) bits recovered %.1f%% (>=90%%) in "
                    "%.0fs (<=300)",
                    e.train, bits, dt)};
}

// 3. Singleton statistics under the uniform prior at N=n=500.
Result criterion_3() {
  RngStream rng(3, 0);
  const TaskInstance inst{sample_hc_instance(500, 8, 0.5, rng)};
  MixtureWeights w;
  w.weights.assign(500, 1.0 / 500.0);
  double k_sum = 0.0;
  for (int it = 0; it < 200; ++it)
    k_sum += generate_dataset(inst, w, 500, rng).num_singletons;
  const double mean_k = k_sum / 200.0 / 500.0;
  const double mu1 = std::pow(1.0 - 1.0 / 500.0, 499);

  RngStream rng2(3, 1);
  const MixtureStats st =
      mixture_stats(uniform_prior(), 500, 500, 200, rng2, true);
  const double tau_dev = std::fabs(st.tau1 - 1.0 / 500.0);
  const bool pass = std::fabs(mean_k - mu1) <= 0.02 && st.tau1_se > 0.0 &&
                    tau_dev <= 3.0 * st.tau1_se;
  return {pass, fmt("mean K/n %.4f (%.4f +-0.02), tau1 %.6f (1/500 +-3se, "
                    "se %.2e)",
                    mean_k, mu1, st.tau1, st.tau1_se)};
}

// 4. Memorizer's conditional error on one-example subpopulations matches
//    1/2 - (1-delta)^2/4 within 0.005 at 10^5 trials, for three noise levels.
Result criterion_4() {
  std::string detail;
  bool pass = true;
  int idx = 0;
  for (const double delta : {0.0, 0.2, 0.5}) {
    RngStream rng(4, static_cast<std::uint64_t>(idx++));
    const double est = nsp_singleton_error_estimate(999, delta, 100000, rng);
    const double want = 0.5 - (1.0 - delta) * (1.0 - delta) / 4.0;
    const double dev = std::fabs(est - want);
    pass = pass && dev <= 0.005;
    detail += fmt("d=%.1f: %.4f vs %.4f (|diff| %.4f <= 0.005) ", delta, est,
                  want, dev);
  }
  return {pass, detail};
}

// 5. Nearest-neighbor rule equals the exhaustive posterior argmax on 1000
//    random singleton instances (d=10, k=4, rho=0.5), under one second.
Result criterion_5() {
  const double t0 = now_s();
  RngStream rng(5, 0);
  int cases = 0, matches = 0;
  for (int it = 0; it < 1000; ++it) {
    Dataset data;
    data.num_subpops = 4;
    for (int j = 0; j < 4; ++j)
      data.examples.push_back({BitString::random(10, rng), j, j});
    data.recount_singletons();
    const int j = static_cast<int>(rng.uniform_below(4));
    const BitString y = bsc_apply(
        std::get<BitString>(data.examples[static_cast<std::size_t>(j)].features),
        0.25, rng);
    std::vector<double> like(4);
    for (int l = 0; l < 4; ++l) {
      const double h = static_cast<double>(hamming(
          std::get<BitString>(data.examples[static_cast<std::size_t>(l)].features),
          y));
      like[static_cast<std::size_t>(l)] =
          std::pow(0.25, h) * std::pow(0.75, 10.0 - h);
    }
    const int best = argmax_lowest(like);
    int ties = 0;
    for (const double v : like)
      if (v == like[static_cast<std::size_t>(best)]) ++ties;
    if (ties != 1) continue;
    ++cases;
    if (nn_predict_hc(data, y) == best) ++matches;
  }
  const double dt = now_s() - t0;
  const bool pass = cases > 0 && matches == cases && dt <= 1.0;
  return {pass, fmt("%d/%d unique-argmax cases matched in %.3fs (<=1s)",
                    matches, cases, dt)};
}

// 6. Contraction inequality I(M;Y) <= rho^2 I(M;X) + 1e-9 over 100 random
//    maps at each of (d=8, rho=0.1) and (d=8, rho=0.3), exact enumeration.
Result criterion_6() {
  const double t0 = now_s();
  RngStream rng(6, 0);
  int violations = 0, checked = 0;
  for (const double rho : {0.1, 0.3}) {
    for (int it = 0; it < 100; ++it) {
      const int R = 2 + static_cast<int>(rng.uniform_below(63));
      std::vector<int> map(256);
      for (int& m : map)
        m = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(R)));
      const SdpiResult res = sdpi_check(map, 8, rho, true);
      ++checked;
      if (!res.holds) ++violations;
    }
  }
  const double dt = now_s() - t0;
  const bool pass = violations == 0 && checked == 200 && dt <= 60.0;
  return {pass, fmt("%d violations in %d exact checks, %.1fs (<=60s)",
                    violations, checked, dt)};
}

// 7. Analytic gradients within 1e-4 relative of central finite differences on
//    20 random small instances per architecture.
Result criterion_7() {
  double worst_logit = 0.0, worst_mlp = 0.0;
  for (int it = 0; it < 20; ++it) {
    RngStream rng(7, static_cast<std::uint64_t>(it));
    const TaskInstance inst{sample_hc_instance(3, 10, 0.6, rng)};
    MixtureWeights w;
    w.weights.assign(3, 1.0 / 3.0);
    const Dataset data = generate_dataset(inst, w, 8, rng);
    TrainConfig tc;
    tc.updates = 0;
    tc.init_scale = 0.3;
    tc.seed = static_cast<std::uint64_t>(1000 + it);
    worst_logit = std::max(worst_logit, grad_check(train_logit(data, 3, tc), data, 1e-5));
    worst_mlp = std::max(worst_mlp, grad_check(train_mlp(data, 3, 5, tc), data, 1e-5));
  }
  const bool pass = worst_logit <= 1e-4 && worst_mlp <= 1e-4;
  return {pass, fmt("worst relative deviation: logit %.2e, mlp %.2e (<=1e-4)",
                    worst_logit, worst_mlp)};
}

// 8. Both attacks recover a planted 200-bit string exactly through the
//    monotone oracle in 100 of 100 seeded runs.
Result criterion_8() {
  int exact = 0;
  for (int s = 0; s < 100; ++s) {
    RngStream rng(8, static_cast<std::uint64_t>(s));
    const BitString planted = BitString::random(200, rng);
    const MonotoneOracle oracle(planted, 1, 4);
    const BitString ca = coordinate_ascent_attack(oracle, 1, 200, 400, rng);
    const BitString gs = gradient_sign_attack(oracle, 1, 200, 32, rng);
    if (ca == planted && gs == planted) ++exact;
  }
  return {exact == 100, fmt("%d/100 runs recovered all 200 bits", exact)};
}

// 9. Closed-form boundary identities hold bit for bit.
Result criterion_9() {
  bool pass = true;
  std::string detail;

  for (const int d : {7, 99, 250})
    for (const double delta : {0.0, 0.3})
      pass = pass && nsp_oneshot_bound(d, delta, 0.0).value == (d + 1) / 2.0;
  detail += fmt("one-shot eps=0 == (d+1)/2: %s; ", pass ? "yes" : "NO");

  const bool dp_ok = dp_info_bound(0.0, 0.0, 1, 1).value == 0.0 &&
                     dp_info_bound(0.0, 0.0, 500, 1000).value == 0.0;
  detail += fmt("privacy alpha=beta=0 == 0: %s; ", dp_ok ? "yes" : "NO");
  pass = pass && dp_ok;

  double eps = binary_entropy_inverse(0.5);
  bool found = binary_entropy(eps) == 0.5;
  for (int s = 0; !found && s < 4; ++s) {
    const double up = std::nextafter(eps, 1.0);
    const double dn = std::nextafter(eps, 0.0);
    if (binary_entropy(up) == 0.5) { eps = up; found = true; }
    else if (binary_entropy(dn) == 0.5) { eps = dn; found = true; }
    else eps = up;
  }
  const bool comm_ok = found && hc_comm_bound(500, 1000, 500, 2.0, eps).raw == 0.0 &&
                       hc_comm_bound(10, 50, 20, 1.5, eps).raw == 0.0;
  detail += fmt("communication bound at h(eps)=1/2 == 0: %s", comm_ok ? "yes" : "NO");
  return {pass && comm_ok, detail};
}

// 10. Nearest-neighbor failure probability at k=500, d=1000, a=2 sits
//     strictly inside (0.01, 0.5) and drops when a is raised to 50 with the
//     same seed.
Result criterion_10() {
  RngStream ra(10, 0);
  const double loose = sing_error_estimate(500, 1000, 2.0, 10000, ra);
  RngStream rb(10, 0);
  const double tight = sing_error_estimate(500, 1000, 50.0, 10000, rb);
  const bool pass = loose > 0.01 && loose < 0.5 && tight < loose;
  return {pass, fmt("a=2: %.4f (in (0.01,0.5)); a=50: %.4f (< a=2)", loose, tight)};
}

// 11. Over-training curve at full scale: recovery error falls by at least 40
//     percentage points from step 0 to the final checkpoint.
Result criterion_11() {
  const fs::path dir = scratch("c11");
  std::ostringstream log;
  ExperimentConfig cfg = paper_logit_config(dir.string());
  cfg.snapshot_every = 10;
  if (cmd_curve(cfg, log) != 0) return {false, "curve command failed"};
  std::istringstream in(slurp(dir / "curve.csv"));
  std::string line;
  std::getline(in, line);  // header
  double first = -1.0, last = -1.0;
  while (std::getline(in, line)) {
    const double rec = std::stod(split(line, ',').back());
    if (first < 0.0) first = rec;
    last = rec;
  }
  fs::remove_all(dir);
  const bool pass = first >= 0.0 && last >= 0.0 && first - last >= 40.0;
  return {pass, fmt("recovery %.1f%% at step 0 -> %.1f%% at the end (drop "
                    "%.1f >= 40 points)",
                    first, last, first - last)};
}

// 12. Byte-identical rerun of every pipeline command at --threads 1.
Result criterion_12() {
  const fs::path a = scratch("c12a");
  const fs::path b = scratch("c12b");
  std::ostringstream log;
  ExperimentConfig cfg;
  cfg.n = 60;
  cfg.N = 40;
  cfg.d = 80;
  cfg.a = 50000;
  cfg.classifier = ClassifierKind::kLogit;
  cfg.train.updates = 25;
  cfg.trials = 2;
  cfg.num_test = 100;
  cfg.seed = 12;
  cfg.snapshot_every = 5;
  cfg.attack_params.max_targets = 10;
  int files = 0;
  bool identical = true;
  for (const fs::path& dir : {a, b}) {
    cfg.out = dir.string();
    if (cmd_generate(cfg, log) != 0 || cmd_train(cfg, log) != 0 ||
        cmd_attack(cfg, log) != 0 || cmd_curve(cfg, log) != 0)
      return {false, "pipeline command failed"};
  }
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    if (slurp(entry.path()) != slurp(b / entry.path().filename()))
      identical = false;
  }
  fs::remove_all(a);
  fs::remove_all(b);
  const bool pass = identical && files >= 9;
  return {pass, fmt("%d output files compared, %s", files,
                    identical ? "all byte-identical" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"full-scale logit row", criterion_1},
      {"net surrogate bit recovery", criterion_2},
      {"singleton statistics", criterion_3},
      {"sequence error closed form", criterion_4},
      {"posterior-argmax equivalence", criterion_5},
      {"contraction inequality sweep", criterion_6},
      {"gradient correctness", criterion_7},
      {"monotone oracle recovery", criterion_8},
      {"boundary identities", criterion_9},
      {"failure rate window", criterion_10},
      {"over-training curve", criterion_11},
      {"byte-identical rerun", criterion_12},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && wanted.find(id) == wanted.end()) continue;
    const Result r = criteria[i].second();
    if (!r.pass) ++failures;
    std::printf("[%2d] %s %s: %s\n", id, r.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0) std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
