// Command-line front end: a thin shim over the experiment layer. All real
// work lives in the library so the commands stay scriptable and testable.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "subpop/harness.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  bool paper_scale = false;
};

void add_common(CLI::App* sc, CommonOpts* o) {
  sc->add_option("--config", o->config, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  sc->add_option("--seed", o->seed, "override the master seed");
  sc->add_option("--threads", o->threads, "worker threads for independent trials");
  sc->add_option("--out", o->out, "override the output directory");
  sc->add_flag("--paper-scale", o->paper_scale,
               "switch to the publication-size experiment settings");
}

subpop::ExperimentConfig resolve(const CommonOpts& o) {
  subpop::ExperimentConfig cfg = subpop::load_config_file(o.config);
  if (o.paper_scale) subpop::apply_paper_scale(cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.out) cfg.out = *o.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subpopulation learning and reconstruction workbench"};
  app.require_subcommand(1);

  CommonOpts opts;
  CLI::App* generate = app.add_subcommand(
      "generate", "sample problem instances and training sets");
  CLI::App* train = app.add_subcommand(
      "train", "fit the configured classifier and report errors");
  CLI::App* attack = app.add_subcommand(
      "attack", "reconstruct singleton training examples from the model");
  CLI::App* curve = app.add_subcommand(
      "curve", "track errors and reconstruction across training updates");
  for (CLI::App* sc : {generate, train, attack, curve}) add_common(sc, &opts);

  std::string bounds_file;
  CLI::App* bounds = app.add_subcommand(
      "bounds", "evaluate closed-form information bounds from a request file");
  bounds->add_option("inputs", bounds_file, "request file, one bound per line")
      ->required()
      ->check(CLI::ExistingFile);

  std::string suite;
  CLI::App* verify =
      app.add_subcommand("verify", "run built-in numeric self-checks");
  verify
      ->add_option("suite", suite,
                   "prob | mixture | tasks | predictors | train | attacks | "
                   "info | all")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) return subpop::cmd_generate(resolve(opts), std::cout);
    if (train->parsed()) return subpop::cmd_train(resolve(opts), std::cout);
    if (attack->parsed()) return subpop::cmd_attack(resolve(opts), std::cout);
    if (curve->parsed()) return subpop::cmd_curve(resolve(opts), std::cout);
    if (bounds->parsed()) {
      std::ifstream in(bounds_file);
      if (!in.good()) {
        std::cerr << "cannot open " << bounds_file << "\n";
        return 2;
      }
      return subpop::cmd_bounds(in, std::cout, std::cerr);
    }
    if (verify->parsed()) return subpop::cmd_verify(suite, std::cout);
  } catch (const subpop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
