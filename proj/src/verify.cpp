#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <vector>

#include "subpop/harness.hpp"
#include "subpop/info.hpp"
#include "subpop/prob.hpp"

// The verify command: quick numeric self-checks per module, each printed as a
// measured-vs-expected line. These are deliberately small; the test suite digs
// deeper, this is the in-binary smoke screen a user can run anywhere.

namespace subpop {
namespace {

std::string g17v(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Checker {
  std::ostream& log;
  int passes = 0;
  int failures = 0;

  void report(const std::string& name, bool ok, const std::string& measured,
              const std::string& expected) {
    if (ok)
      ++passes;
    else
      ++failures;
    log << (ok ? "  ok   " : "  FAIL ") << name << ": measured " << measured
        << ", expected " << expected << "\n";
  }
  void check_exact(const std::string& name, double m, double e) {
    report(name, m == e, g17v(m), g17v(e));
  }
  void check_near(const std::string& name, double m, double e, double tol) {
    report(name, std::abs(m - e) <= tol, g17v(m), g17v(e) + " +- " + g17v(tol));
  }
  void check_le(const std::string& name, double m, double bound) {
    report(name, m <= bound, g17v(m), "<= " + g17v(bound));
  }
  void check_true(const std::string& name, bool ok) {
    report(name, ok, ok ? "true" : "false", "true");
  }
};

void verify_prob(Checker& c) {
  c.check_exact("binary entropy of 1/2 is one bit", binary_entropy(0.5), 1.0);
  c.check_near("binary entropy at 0.11", binary_entropy(0.11),
               0.499915958164528, 1e-12);
  c.check_near("entropy inverse round trip at 0.3",
               binary_entropy_inverse(binary_entropy(0.3)), 0.3, 1e-12);
  c.check_near("normal cdf at 1.96", normal_cdf(1.96), 0.9750021048517796, 1e-9);
  c.check_near("normal cdf symmetry at 0.7", normal_cdf(0.7) + normal_cdf(-0.7),
               1.0, 1e-12);
  c.check_true("tail approximation window accepts x=5 at d=10^6",
               littlewood_in_validity_range(1000000, 5.0));
  c.check_true("tail approximation window rejects x=1/2",
               !littlewood_in_validity_range(1000000, 0.5));

  RngStream rng(11, 0);
  const BitString x = BitString::random(20000, rng);
  const BitString y = bsc_apply(x, 0.3, rng);
  c.check_near("channel flip rate at 0.3",
               static_cast<double>(hamming(x, y)) / 20000.0, 0.3, 0.017);

  std::vector<double> xs, gs;
  for (int i = 0; i < 25; ++i) {
    xs.push_back(rng.next_double());
    gs.push_back(2.0 * rng.next_double());
  }
  const JensenCheck jc =
      weighted_jensen_holds(xs, gs, [](double t) { return std::sqrt(t); });
  c.check_true("weighted jensen inequality with sqrt", jc.holds);
}

void verify_mixture(Checker& c) {
  RngStream rng(12, 0);
  const Prior uni = uniform_prior();
  const MixtureStats st = mixture_stats(uni, 500, 500, 10, rng);
  c.check_true("uniform prior reports closed forms", st.closed_form);
  c.check_exact("uniform tau1 equals 1/N", st.tau1, 1.0 / 500.0);
  c.check_exact("uniform mu1 equals (1-1/N)^(n-1)", st.mu1,
                std::pow(1.0 - 1.0 / 500.0, 499));

  const MixtureWeights w = sample_weights(uni, 7, rng);
  double dev = 0.0;
  for (const double wi : w.weights) dev = std::max(dev, std::abs(wi - 1.0 / 7.0));
  c.check_exact("uniform weights are exactly 1/N", dev, 0.0);

  const Prior bim = build_bimodal_prior(4);
  c.check_exact("two-valued prior bin count at n=4",
                static_cast<double>(bim.total_count()), 16.0);
  double heavy = 0.0;
  for (const PriorEntry& e : bim.entries)
    if (e.value == 0.125) heavy += static_cast<double>(e.count);
  c.check_exact("heavy value multiplicity at n=4", heavy, 4.0);
  const Prior app = build_bimodal_prior(4, true);
  c.check_exact("appendix variant bin count at n=4",
                static_cast<double>(app.total_count()), 64.0);
  c.check_true("prior text round trip",
               prior_to_text(prior_from_text(prior_to_text(bim))) ==
                   prior_to_text(bim));

  const MixtureStats mc = mixture_stats(bim, 16, 16, 2000, rng);
  c.check_true("two-valued stats come from sampling", !mc.closed_form);
  c.check_true("sampled mu1 lies in (0,1)", mc.mu1 > 0.0 && mc.mu1 < 1.0);
}

void verify_tasks(Checker& c) {
  RngStream rng(13, 0);
  const Prior uni = uniform_prior();

  const TaskInstance hc = sample_hc_instance(6, 16, 0.6, rng);
  const MixtureWeights w6 = sample_weights(uni, 6, rng);
  {
    const std::string text = instance_to_text(hc, w6);
    auto [inst2, w2] = instance_from_text(text);
    c.check_true("cluster instance text round trip",
                 instance_to_text(inst2, w2) == text);
  }
  {
    const TaskInstance inst = sample_nsp_instance(5, 12, 0.2, rng);
    const MixtureWeights w = sample_weights(uni, 5, rng);
    const std::string text = instance_to_text(inst, w);
    auto [inst2, w2] = instance_from_text(text);
    c.check_true("sequence instance text round trip",
                 instance_to_text(inst2, w2) == text);
  }
  {
    const TaskInstance inst = sample_la_instance(4, 6, 1.0, rng);
    const MixtureWeights w = sample_weights(uni, 4, rng);
    const std::string text = instance_to_text(inst, w);
    auto [inst2, w2] = instance_from_text(text);
    c.check_true("symbol instance text round trip",
                 instance_to_text(inst2, w2) == text);
  }
  {
    const TaskInstance inst = sample_threshold_instance(10, rng);
    const MixtureWeights w{{1.0}};
    const std::string text = instance_to_text(inst, w);
    auto [inst2, w2] = instance_from_text(text);
    c.check_true("threshold instance text round trip",
                 instance_to_text(inst2, w2) == text);
  }
  {
    const TaskInstance inst = sample_two_length_instance(12, rng);
    const MixtureWeights w{{1.0}};
    const std::string text = instance_to_text(inst, w);
    auto [inst2, w2] = instance_from_text(text);
    c.check_true("two-length instance text round trip",
                 instance_to_text(inst2, w2) == text);

    std::vector<LabeledExample> seen;
    for (int i = 0; i < 60; ++i)
      seen.push_back(
          sample_two_length_example(std::get<TwoLengthInstance>(inst), rng));
    c.check_true("two-length parameters identified from samples",
                 two_length_learner(seen).known);
  }

  const Dataset data = generate_dataset(hc, w6, 30, rng);
  const std::string text = dataset_to_text(data, TaskKind::kHypercube, 16, 0.6, 9);
  auto [data2, hdr] = dataset_from_text(text);
  c.check_true("dataset text round trip",
               dataset_to_text(data2, hdr.kind, hdr.d, hdr.param, hdr.seed) ==
                   text);
  Dataset recounted = data2;
  recounted.recount_singletons();
  c.check_exact("singleton bookkeeping stable under recount",
                static_cast<double>(recounted.num_singletons),
                static_cast<double>(data.num_singletons));

  const HCInstance& hci = std::get<HCInstance>(hc);
  int bad = 0;
  for (int it = 0; it < 50; ++it) {
    const int j = static_cast<int>(rng.uniform_below(6));
    const LabeledExample ex = sample_hc_example(hci, j, rng);
    const BitString& f = std::get<BitString>(ex.features);
    for (int b = 0; b < 16; ++b)
      if (hci.fixed_mask[static_cast<std::size_t>(j)].get(static_cast<std::size_t>(b)) &&
          f.get(static_cast<std::size_t>(b)) !=
              hci.fixed_value[static_cast<std::size_t>(j)].get(static_cast<std::size_t>(b)))
        ++bad;
    if (ex.label != j) ++bad;
  }
  c.check_exact("pinned cluster coordinates honored", static_cast<double>(bad), 0.0);

  c.check_near("similarity calibration at n=500 d=1000 a=50000",
               rho_for(500, std::pow(499.0 / 500.0, 499), 50000, 1000),
               0.17390765203, 1e-10);
}

void verify_predictors(Checker& c) {
  RngStream rng(14, 0);

  // Exhaustive posterior argmax vs the nearest-neighbor rule on singleton
  // datasets; only cases with a unique argmax count.
  int cases = 0, matches = 0;
  for (int it = 0; it < 100; ++it) {
    Dataset data;
    data.num_subpops = 3;
    for (int j = 0; j < 3; ++j)
      data.examples.push_back({BitString::random(8, rng), j, j});
    data.recount_singletons();
    const int j = static_cast<int>(rng.uniform_below(3));
    const BitString y = bsc_apply(
        std::get<BitString>(data.examples[static_cast<std::size_t>(j)].features),
        0.25, rng);
    std::vector<double> like(3);
    for (int l = 0; l < 3; ++l) {
      const double h = static_cast<double>(hamming(
          std::get<BitString>(data.examples[static_cast<std::size_t>(l)].features), y));
      like[static_cast<std::size_t>(l)] = std::pow(0.25, h) * std::pow(0.75, 8.0 - h);
    }
    const int best = argmax_lowest(like);
    int ties = 0;
    for (const double v : like)
      if (v == like[static_cast<std::size_t>(best)]) ++ties;
    if (ties != 1) continue;
    ++cases;
    if (nn_predict_hc(data, y) == best) ++matches;
  }
  c.check_exact("nearest neighbor equals the posterior argmax",
                static_cast<double>(matches), static_cast<double>(cases));

  int recall_bad = 0;
  for (int it = 0; it < 20; ++it) {
    Dataset data;
    data.num_subpops = 3;
    for (int j = 0; j < 3; ++j)
      data.examples.push_back({BitString::random(32, rng), j, j});
    data.recount_singletons();
    for (int j = 0; j < 3; ++j)
      if (nn_predict_hc(data, std::get<BitString>(
                                  data.examples[static_cast<std::size_t>(j)].features)) != j)
        ++recall_bad;
  }
  c.check_exact("nearest neighbor recalls training points",
                static_cast<double>(recall_bad), 0.0);

  RngStream r2(14, 1);
  c.check_near("sequence singleton error closed form (d=99, delta=0.2)",
               nsp_singleton_error_estimate(99, 0.2, 20000, r2),
               nsp_singleton_error_exact(99, 0.2), 0.015);

  RngStream ra(14, 2);
  const double loose = sing_error_estimate(50, 200, 2.0, 2000, ra);
  RngStream rb(14, 2);
  const double tight = sing_error_estimate(50, 200, 50.0, 2000, rb);
  c.check_true("singleton failure rate lies in (0, 0.9)",
               loose > 0.0 && loose < 0.9);
  c.check_le("singleton failure rate drops as a grows", tight, loose);

  RngStream r3(14, 3);
  const HCInstance inst = sample_hc_instance(6, 64, 0.8, r3);
  const MixtureWeights w = sample_weights(uniform_prior(), 6, r3);
  const Dataset data = generate_dataset(TaskInstance{inst}, w, 12, r3);
  int mism = 0;
  for (const LabeledExample& ex : data.examples)
    if (baseline_hc_predict(data, std::get<BitString>(ex.features), 0.8) != ex.label)
      ++mism;
  c.check_exact("baseline recalls training points", static_cast<double>(mism), 0.0);
}

void verify_train(Checker& c) {
  RngStream r(15, 0);
  const HCInstance small = sample_hc_instance(4, 12, 0.7, r);
  const MixtureWeights w4 = sample_weights(uniform_prior(), 4, r);
  const Dataset tiny = generate_dataset(TaskInstance{small}, w4, 16, r);

  TrainConfig frozen;
  frozen.updates = 0;
  frozen.init_scale = 0.3;
  frozen.seed = 5;
  const LogitModel lm = train_logit(tiny, 4, frozen);
  c.check_le("analytic logit gradients match finite differences",
             grad_check(lm, tiny, 1e-5), 1e-4);
  const MlpModel mm = train_mlp(tiny, 4, 7, frozen);
  c.check_le("analytic net gradients match finite differences",
             grad_check(mm, tiny, 1e-5), 1e-4);

  const HCInstance med = sample_hc_instance(20, 60, 0.7, r);
  const MixtureWeights w20 = sample_weights(uniform_prior(), 20, r);
  const Dataset data = generate_dataset(TaskInstance{med}, w20, 40, r);
  TrainConfig tc;
  tc.updates = 80;
  tc.learning_rate = 0.5;
  tc.seed = 77;
  std::vector<double> losses;
  const LogitModel fit = train_logit(data, 20, tc, &losses);
  int errs = 0;
  for (const LabeledExample& ex : data.examples)
    if (fit.predict(ex.features) != ex.label) ++errs;
  c.check_le("small logit fit train error",
             static_cast<double>(errs) / data.size(), 0.05);
  c.check_le("loss does not increase end to end", losses.back(), losses.front());

  std::ostringstream buf;
  save_model(fit, buf);
  std::istringstream in(buf.str());
  const auto reloaded = load_model(in);
  double maxdev = 0.0;
  std::vector<double> pa(20), pb(20);
  for (int it = 0; it < 20; ++it) {
    const Features q{BitString::random(60, r)};
    fit.predict_proba(q, pa);
    reloaded->predict_proba(q, pb);
    for (int i = 0; i < 20; ++i)
      maxdev = std::max(maxdev, std::abs(pa[static_cast<std::size_t>(i)] -
                                         pb[static_cast<std::size_t>(i)]));
  }
  c.check_exact("checkpoint round trip is bit exact", maxdev, 0.0);

  bool threw = false;
  try {
    TrainConfig wild;
    wild.learning_rate = 1e308;
    wild.updates = 5;
    train_logit(tiny, 4, wild);
  } catch (const std::runtime_error&) {
    threw = true;
  }
  c.check_true("runaway training raises an error", threw);
}

void verify_attacks(Checker& c) {
  RngStream rng(16, 0);
  std::size_t wrong_bits = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const BitString planted = BitString::random(100, rng);
    const MonotoneOracle oracle(planted, 2, 5);
    wrong_bits += hamming(coordinate_ascent_attack(oracle, 2, 100, 200, rng), planted);
    wrong_bits += hamming(gradient_sign_attack(oracle, 2, 100, 32, rng), planted);
  }
  c.check_exact("monotone oracle recovered exactly (10 runs, both attacks)",
                static_cast<double>(wrong_bits), 0.0);

  struct Flat : ProbClassifier {
    int num_classes() const override { return 2; }
    void predict_proba(const Features&, std::span<double> out) const override {
      out[0] = 0.5;
      out[1] = 0.5;
    }
  };
  const Flat flat;
  const std::size_t ones =
      coordinate_ascent_attack(flat, 1, 40, 80, rng).count_ones() +
      gradient_sign_attack(flat, 1, 40, 8, rng).count_ones();
  c.check_exact("score ties resolve to zero bits", static_cast<double>(ones), 0.0);

  const std::vector<BitString> est = {BitString::from_string("000"),
                                      BitString::from_string("1111")};
  const std::vector<BitString> tru = {BitString::from_string("011"),
                                      BitString::from_string("1111")};
  c.check_near("recovery error arithmetic", recovery_error(est, tru),
               100.0 * (2.0 / 3.0) / 2.0, 1e-12);

  const BitString planted = BitString::random(64, rng);
  const MonotoneOracle oracle(planted, 0, 3);
  RngStream a1(16, 7), a2(16, 7);
  c.check_true("coordinate ascent is deterministic per stream",
               coordinate_ascent_attack(oracle, 0, 64, 128, a1) ==
                   coordinate_ascent_attack(oracle, 0, 64, 128, a2));
}

void verify_info(Checker& c) {
  std::vector<double> uni16(16, 1.0 / 16.0);
  std::vector<int> id16(16);
  std::iota(id16.begin(), id16.end(), 0);
  c.check_exact("identity channel carries 4 bits",
                mutual_information(channel_from_map(uni16, id16)), 4.0);
  std::vector<int> parity(16);
  for (int x = 0; x < 16; ++x)
    parity[static_cast<std::size_t>(x)] = std::popcount(static_cast<unsigned>(x)) & 1;
  c.check_exact("parity channel carries 1 bit",
                mutual_information(channel_from_map(uni16, parity)), 1.0);

  RngStream rng(17, 0);
  int violations = 0;
  for (int it = 0; it < 20; ++it) {
    const int R = 2 + static_cast<int>(rng.uniform_below(7));
    std::vector<int> map(64);
    for (int& m : map) m = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(R)));
    for (const double rho : {0.1, 0.3})
      if (!sdpi_check(map, 6, rho, true).holds) ++violations;
  }
  c.check_exact("data-processing contraction holds on random maps",
                static_cast<double>(violations), 0.0);

  c.check_exact("fano floor at zero error", fano_lower(8, 0.0).value, 3.0);
  c.check_exact("one-shot sequence bound at eps=0 (d=7)",
                nsp_oneshot_bound(7, 0.0, 0.0).value, 4.0);
  c.check_exact("privacy bound at alpha=beta=0",
                dp_info_bound(0.0, 0.0, 5, 9).value, 0.0);

  double eps_half = binary_entropy_inverse(0.5);
  bool found = binary_entropy(eps_half) == 0.5;
  for (int s = 0; !found && s < 4; ++s) {
    const double up = std::nextafter(eps_half, 1.0);
    const double dn = std::nextafter(eps_half, 0.0);
    if (binary_entropy(up) == 0.5) { eps_half = up; found = true; }
    else if (binary_entropy(dn) == 0.5) { eps_half = dn; found = true; }
    else eps_half = up;
  }
  if (found)
    c.check_exact("communication bound vanishes at h(eps)=1/2",
                  hc_comm_bound(10, 50, 20, 2.0, eps_half).raw, 0.0);
  else
    c.check_true("communication bound vanishes at h(eps)=1/2", false);

  const Compressor identity = [](const std::vector<BitString>& xs) {
    int m = 0;
    for (const BitString& s : xs)
      for (std::size_t b = 0; b < s.size(); ++b) m = (m << 1) | (s.get(b) ? 1 : 0);
    return m;
  };
  const SingletonMiResult full = empirical_singleton_mi(2, 3, identity, 0.5, true);
  c.check_exact("identity compressor stores every planted bit", full.info_bits, 6.0);
  const Compressor constant = [](const std::vector<BitString>&) { return 0; };
  const SingletonMiResult none = empirical_singleton_mi(2, 3, constant, 0.5, true);
  c.check_exact("constant compressor stores nothing", none.info_bits, 0.0);
  c.check_exact("blind responder errs at chance", none.responder_error, 0.5);
  const BoundResult floor = fano_lower(2, full.info_bits == 6.0 ? full.responder_error
                                                                : none.responder_error);
  c.check_le("fano floor stays below measured information",
             floor.valid ? floor.value : 0.0, full.info_bits + 1e-9);
}

}  // namespace

int cmd_verify(const std::string& suite, std::ostream& log) {
  using Fn = void (*)(Checker&);
  const std::pair<const char*, Fn> suites[] = {
      {"prob", &verify_prob},       {"mixture", &verify_mixture},
      {"tasks", &verify_tasks},     {"predictors", &verify_predictors},
      {"train", &verify_train},     {"attacks", &verify_attacks},
      {"info", &verify_info}};

  Checker c{log};
  bool ran = false;
  for (const auto& [name, fn] : suites) {
    if (suite == "all" || suite == name) {
      log << "[" << name << "]\n";
      fn(c);
      ran = true;
    }
  }
  if (!ran) {
    log << "unknown suite '" << suite
        << "'; expected one of: prob mixture tasks predictors train attacks "
           "info all\n";
    return 2;
  }
  log << "verify: " << c.passes << " passed, " << c.failures << " failed\n";
  return c.failures == 0 ? 0 : 1;
}

}  // namespace subpop
