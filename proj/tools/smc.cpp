// Command-line front end: smc estimate|hypothesis|oracle|synthetic ...

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smc/smc.hpp"

namespace {

void add_common(CLI::App* sub, smc::RunConfig& cfg, std::string& out_path, bool needs_model) {
  if (needs_model) {
    sub->add_option("--model", cfg.model_path, "model file")->required()->check(CLI::ExistingFile);
    sub->add_option("--prop", cfg.property, "property name declared in the model, or formula text")->required();
    auto* max = sub->add_flag("--max", "maximize (default)");
    auto* min = sub->add_flag_callback("--min", [&cfg] { cfg.direction = smc::Direction::min; }, "minimize");
    max->excludes(min);
    sub->add_option("--class", cfg.cls, "scheduler class")
        ->transform(CLI::CheckedTransformer(std::map<std::string, smc::SchedulerClass>{
            {"history", smc::SchedulerClass::history}, {"memoryless", smc::SchedulerClass::memoryless}}));
  }
  sub->add_option("--seed", cfg.master_seed, "master seed");
  sub->add_flag("--random-seed", cfg.random_seed, "draw the master seed from system entropy");
  sub->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--format", cfg.format, "output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, smc::OutputFormat>{{"json", smc::OutputFormat::json}, {"csv", smc::OutputFormat::csv}}));
  sub->add_option("--out", out_path, "write output to FILE instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  smc::RunConfig cfg;
  std::string out_path;
  CLI::App app{"Statistical model checking of MDPs with hash-defined schedulers"};
  app.require_subcommand(1);

  try {
    smc::apply_environment(cfg);
  } catch (const smc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }

  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> schedulers;

  auto* estimate = app.add_subcommand("estimate", "estimate the extremal probability");
  add_common(estimate, cfg, out_path, true);
  estimate->add_option("--epsilon", cfg.epsilon, "estimation error");
  estimate->add_option("--delta", cfg.delta, "error probability");
  auto* eb = estimate->add_option("--budget", budget, "per-iteration budget N_max (smart sampling)");
  auto* es = estimate->add_option("--schedulers", schedulers, "scheduler count M (simple sampling)");
  eb->excludes(es);

  auto* hypothesis = app.add_subcommand("hypothesis", "test H0: P >= theta (--max) or P <= theta (--min)");
  add_common(hypothesis, cfg, out_path, true);
  hypothesis->add_option("--epsilon", cfg.epsilon, "half-width of the indifference region");
  hypothesis->add_option("--alpha", cfg.alpha, "type I error");
  hypothesis->add_option("--beta", cfg.beta, "type II error");
  hypothesis->add_option("--theta", cfg.theta, "probability threshold");
  auto* hb = hypothesis->add_option("--budget", budget, "per-iteration budget N_max (smart sampling)");
  auto* hs = hypothesis->add_option("--schedulers", schedulers, "scheduler count M (simple sampling)");
  hb->excludes(hs);

  auto* oracle = app.add_subcommand("oracle", "exact probabilities by prefix-tree expansion");
  add_common(oracle, cfg, out_path, true);
  std::optional<std::uint64_t> sigma;
  bool uniform = false;
  bool approximate = false;
  auto* os = oracle->add_option("--scheduler", sigma, "probability under the hash-defined scheduler SIGMA");
  auto* ou = oracle->add_flag("--uniform", uniform, "expectation under the uniform probabilistic scheduler");
  os->excludes(ou);
  oracle->add_flag("--approximate", approximate, "long double arithmetic with an error bound");
  oracle->add_option("--node-cap", cfg.node_cap, "maximum prefix-tree nodes");

  auto* synthetic = app.add_subcommand("synthetic", "smart estimation over a virtual scheduler population");
  add_common(synthetic, cfg, out_path, false);
  synthetic->add_option("--epsilon", cfg.epsilon, "estimation error");
  synthetic->add_option("--delta", cfg.delta, "error probability");
  synthetic->add_option("--budget", budget, "per-iteration budget N_max");
  synthetic->add_option("--population", cfg.population.kind, "population density")
      ->transform(CLI::CheckedTransformer(std::map<std::string, smc::PopulationKind>{
          {"linear", smc::PopulationKind::linear},
          {"exponential", smc::PopulationKind::exponential},
          {"explicit", smc::PopulationKind::explicit_list}}));
  synthetic->add_option("--pmax", cfg.population.p_max, "largest success probability");
  synthetic->add_option("--rate", cfg.population.rate, "exponential rate");
  synthetic->add_option("--mass", cfg.population.mass, "fraction of schedulers with non-zero probability");
  synthetic->add_option("--probs", cfg.population.probabilities, "explicit probabilities")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  if (budget) cfg.budget = budget;
  if (schedulers) {
    cfg.schedulers = schedulers;
    cfg.budget.reset();
  } else if (budget) {
    cfg.schedulers.reset();
  }
  if (estimate->parsed()) {
    cfg.mode = cfg.schedulers && !budget ? smc::Mode::simple_estimate : smc::Mode::smart_estimate;
  } else if (hypothesis->parsed()) {
    cfg.mode = cfg.schedulers && !budget ? smc::Mode::simple_hypothesis : smc::Mode::smart_hypothesis;
  } else if (oracle->parsed()) {
    cfg.mode = smc::Mode::oracle;
    cfg.sigma = sigma;
    cfg.exact = !approximate;
    cfg.oracle_target = sigma ? smc::OracleTarget::scheduler
                        : uniform ? smc::OracleTarget::uniform
                                  : smc::OracleTarget::optimum;
  } else {
    cfg.mode = smc::Mode::synthetic;
  }

  try {
    const smc::OutputRecord record = smc::run(cfg);
    const std::string text = smc::emit(record, cfg.format);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(out_path);
      if (!(f << text)) {
        std::cerr << "error: cannot write " << out_path << '\n';
        return 3;
      }
    }
    return record.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
