#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smc/algorithms.hpp"
#include "smc/error.hpp"
#include "smc/model_parser.hpp"
#include "smc/oracle.hpp"
#include "smc/parallel.hpp"
#include "smc/scheduler.hpp"
#include "smc/stats.hpp"
#include "smc/synthetic.hpp"

namespace smc {

enum class Mode { smart_estimate, smart_hypothesis, simple_estimate, simple_hypothesis, oracle, synthetic };
enum class OutputFormat { json, csv };
enum class OracleTarget { optimum, scheduler, uniform };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::smart_estimate: return "smart-estimate";
    case Mode::smart_hypothesis: return "smart-hypothesis";
    case Mode::simple_estimate: return "simple-estimate";
    case Mode::simple_hypothesis: return "simple-hypothesis";
    case Mode::oracle: return "oracle";
    case Mode::synthetic: return "synthetic";
  }
  return "?";
}

inline const char* to_string(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

inline constexpr std::uint64_t default_master_seed = 0x243F6A8885A308D3ull;

struct RunConfig {
  Mode mode = Mode::smart_estimate;
  std::string model_path;
  std::string model_text;  // used instead of model_path when non-empty
  std::string property;    // property name or formula text
  Direction direction = Direction::max;
  SchedulerClass cls = SchedulerClass::history;
  double epsilon = 0.01;
  double delta = 0.01;
  double alpha = 0.01;
  double beta = 0.01;
  double theta = 0.5;
  std::optional<std::uint64_t> budget;      // N_max for the smart modes
  std::optional<std::uint64_t> schedulers;  // M for the simple modes
  std::uint64_t master_seed = default_master_seed;
  bool random_seed = false;
  std::size_t workers = 1;
  OutputFormat format = OutputFormat::json;
  // oracle
  OracleTarget oracle_target = OracleTarget::optimum;
  std::optional<std::uint64_t> sigma;
  bool exact = true;
  std::uint64_t node_cap = 10'000'000;
  // synthetic
  SyntheticPopulation population;
  // environment variables that supplied defaults, echoed in the output
  std::map<std::string, std::string> environment;
};

/// One row of the per-iteration table.
struct IterationRow {
  std::size_t iteration = 0;
  std::uint64_t candidates = 0;
  std::uint64_t sims_per_candidate = 0;
  double confidence = 1.0;
  double best_estimate = 0.0;
  double mean_estimate = 0.0;
  std::optional<double> max_true;
  std::string stage;
};

struct OutputRecord {
  nlohmann::json config;   // echo, including hash modulus and PRNG
  nlohmann::json payload;  // pure function of the config minus the worker count
  std::vector<IterationRow> iterations;
  std::uint64_t simulations = 0;
  double wall_seconds = 0;
  int exit_code = 0;  // 0 success/accepted, 1 rejected or not found, 2 inconclusive
  // summary row of the CSV table
  std::string outcome;
  std::optional<double> summary_value;
  std::optional<double> summary_confidence;
};

// ---------------------------------------------------------------------------
// Environment defaults

namespace detail {

inline double parse_real(std::string_view name, const std::string& text) {
  double v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw ConfigError(std::string(name) + ": not a number: '" + text + "'");
  }
  return v;
}

inline std::uint64_t parse_count(std::string_view name, const std::string& text) {
  std::uint64_t v = 0;
  const int base = text.starts_with("0x") || text.starts_with("0X") ? 16 : 10;
  const char* first = text.data() + (base == 16 ? 2 : 0);
  const auto [p, ec] = std::from_chars(first, text.data() + text.size(), v, base);
  if (ec != std::errc{} || p != text.data() + text.size() || first == text.data() + text.size()) {
    throw ConfigError(std::string(name) + ": not an unsigned integer: '" + text + "'");
  }
  return v;
}

}  // namespace detail

using EnvLookup = std::function<const char*(const char*)>;

/// Fills defaults from SMC_* variables and records each one used. Command-line
/// flags are applied afterwards and win.
inline void apply_environment(RunConfig& cfg, const EnvLookup& lookup = [](const char* n) { return std::getenv(n); }) {
  auto take = [&](const char* name, auto&& apply) {
    if (const char* v = lookup(name)) {
      const std::string text(v);
      apply(text);
      cfg.environment[name] = text;
    }
  };
  take("SMC_EPSILON", [&](const std::string& t) { cfg.epsilon = detail::parse_real("SMC_EPSILON", t); });
  take("SMC_DELTA", [&](const std::string& t) { cfg.delta = detail::parse_real("SMC_DELTA", t); });
  take("SMC_ALPHA", [&](const std::string& t) { cfg.alpha = detail::parse_real("SMC_ALPHA", t); });
  take("SMC_BETA", [&](const std::string& t) { cfg.beta = detail::parse_real("SMC_BETA", t); });
  take("SMC_THETA", [&](const std::string& t) { cfg.theta = detail::parse_real("SMC_THETA", t); });
  take("SMC_BUDGET", [&](const std::string& t) { cfg.budget = detail::parse_count("SMC_BUDGET", t); });
  take("SMC_SCHEDULERS", [&](const std::string& t) { cfg.schedulers = detail::parse_count("SMC_SCHEDULERS", t); });
  take("SMC_SEED", [&](const std::string& t) { cfg.master_seed = detail::parse_count("SMC_SEED", t); });
  take("SMC_WORKERS", [&](const std::string& t) { cfg.workers = detail::parse_count("SMC_WORKERS", t); });
  take("SMC_FORMAT", [&](const std::string& t) {
    if (t == "json") {
      cfg.format = OutputFormat::json;
    } else if (t == "csv") {
      cfg.format = OutputFormat::csv;
    } else {
      throw ConfigError("SMC_FORMAT must be json or csv");
    }
  });
  take("SMC_CLASS", [&](const std::string& t) {
    if (t == "history") {
      cfg.cls = SchedulerClass::history;
    } else if (t == "memoryless") {
      cfg.cls = SchedulerClass::memoryless;
    } else {
      throw ConfigError("SMC_CLASS must be history or memoryless");
    }
  });
}

// ---------------------------------------------------------------------------
// JSON helpers

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.index},         {"stage", to_string(r.stage)},
          {"M_i", r.candidates},          {"N_i", r.sims_per_candidate},
          {"confidence", r.confidence},   {"best_estimate", r.best_estimate},
          {"mean_estimate", r.mean_estimate}, {"simulations", r.simulations}};
}

inline IterationRow to_row(const IterationRecord& r) {
  return {r.index, r.candidates, r.sims_per_candidate, r.confidence, r.best_estimate, r.mean_estimate,
          std::nullopt, to_string(r.stage)};
}

inline nlohmann::json optional_sigma(const std::optional<SchedulerId>& s) {
  return s ? nlohmann::json(s->value) : nlohmann::json(nullptr);
}

inline nlohmann::json config_echo(const RunConfig& cfg) {
  nlohmann::json j = {
      {"mode", to_string(cfg.mode)},
      {"direction", to_string(cfg.direction)},
      {"class", to_string(cfg.cls)},
      {"master_seed", cfg.master_seed},
      {"random_seed", cfg.random_seed},
      {"workers", cfg.workers},
      {"format", to_string(cfg.format)},
      {"hash_modulus", hash_modulus},
      {"prng", prng_name},
      {"environment", cfg.environment},
  };
  if (cfg.mode != Mode::synthetic) {
    j["model"] = cfg.model_path;
    j["property"] = cfg.property;
  }
  switch (cfg.mode) {
    case Mode::smart_estimate:
    case Mode::synthetic:
      j["epsilon"] = cfg.epsilon;
      j["delta"] = cfg.delta;
      j["budget"] = cfg.budget.value_or(0);
      break;
    case Mode::simple_estimate:
      j["epsilon"] = cfg.epsilon;
      j["delta"] = cfg.delta;
      j["schedulers"] = cfg.schedulers.value_or(0);
      break;
    case Mode::smart_hypothesis:
    case Mode::simple_hypothesis:
      j["epsilon"] = cfg.epsilon;
      j["alpha"] = cfg.alpha;
      j["beta"] = cfg.beta;
      j["theta"] = cfg.theta;
      if (cfg.mode == Mode::smart_hypothesis) {
        j["budget"] = cfg.budget.value_or(0);
      } else {
        j["schedulers"] = cfg.schedulers.value_or(0);
      }
      break;
    case Mode::oracle:
      j["target"] = cfg.oracle_target == OracleTarget::optimum     ? "optimum"
                    : cfg.oracle_target == OracleTarget::scheduler ? "scheduler"
                                                                   : "uniform";
      if (cfg.sigma) j["sigma"] = *cfg.sigma;
      j["exact"] = cfg.exact;
      j["node_cap"] = cfg.node_cap;
      break;
  }
  if (cfg.mode == Mode::synthetic) {
    const SyntheticPopulation& p = cfg.population;
    j["population"] = {{"kind", to_string(p.kind)}};
    if (p.kind == PopulationKind::explicit_list) {
      j["population"]["probabilities"] = p.probabilities;
    } else {
      j["population"]["p_max"] = p.p_max;
      j["population"]["mass"] = p.mass;
      if (p.kind == PopulationKind::exponential) j["population"]["rate"] = p.rate;
    }
  }
  return j;
}

inline int exit_code_for(HypothesisVerdict v) {
  switch (v) {
    case HypothesisVerdict::accepted: return 0;
    case HypothesisVerdict::rejected_given_budget: return 1;
    case HypothesisVerdict::inconclusive_given_budget: return 2;
  }
  return 3;
}

// ---------------------------------------------------------------------------
// Dispatch

namespace detail {

inline std::uint64_t require(const std::optional<std::uint64_t>& v, const char* what) {
  if (!v) throw ConfigError(std::string("this mode needs ") + what);
  if (*v == 0) throw ConfigError(std::string(what) + " must be at least 1");
  return *v;
}

inline void fill_smart(OutputRecord& out, const SmartRunResult& r) {
  out.payload["best_sigma"] = optional_sigma(r.best_sigma);
  out.payload["estimate"] = r.estimate;
  out.payload["direction"] = to_string(r.direction);
  out.payload["terminated_by"] = to_string(r.terminated_by);
  out.payload["confidence"] = r.confidence;
  out.payload["total_simulations"] = r.total_simulations;
  out.payload["deadlocked_traces"] = r.deadlocked_traces;
  out.payload["outcome_digest"] = r.outcome_digest;
  nlohmann::json its = nlohmann::json::array();
  for (const IterationRecord& it : r.iterations) {
    its.push_back(to_json(it));
    out.iterations.push_back(to_row(it));
  }
  out.payload["iterations"] = its;
  out.simulations = r.total_simulations;
  out.outcome = to_string(r.terminated_by);
  out.summary_value = r.estimate;
  out.summary_confidence = r.confidence;
  out.exit_code = r.terminated_by == Termination::empty_candidates ? 1 : 0;
}

inline void fill_hypothesis(OutputRecord& out, const HypothesisResult& r) {
  out.payload["verdict"] = to_string(r.verdict);
  out.payload["witness_sigma"] = optional_sigma(r.witness_sigma);
  out.payload["accepted_by_aggregate"] = r.accepted_by_aggregate;
  out.payload["simulations_used"] = r.simulations_used;
  out.payload["schedulers_tested"] = r.schedulers_tested;
  out.payload["deadlocked_traces"] = r.deadlocked_traces;
  out.payload["outcome_digest"] = r.outcome_digest;
  nlohmann::json its = nlohmann::json::array();
  for (const IterationRecord& it : r.iterations) {
    its.push_back(to_json(it));
    out.iterations.push_back(to_row(it));
  }
  out.payload["iterations"] = its;
  out.simulations = r.simulations_used;
  out.outcome = to_string(r.verdict);
  out.exit_code = exit_code_for(r.verdict);
}

inline nlohmann::json oracle_json(const OracleResult& r) {
  nlohmann::json j = {{"value", static_cast<double>(r.value)},
                      {"error_bound", static_cast<double>(r.error_bound)},
                      {"explored", r.explored},
                      {"witness", r.witness}};
  j["exact"] = r.exact ? nlohmann::json(r.exact_string()) : nlohmann::json(nullptr);
  return j;
}

}  // namespace detail

/// Executes one configured run.
inline OutputRecord run(RunConfig cfg) {
  const auto started = std::chrono::steady_clock::now();
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (cfg.random_seed) {
    std::random_device rd;
    cfg.master_seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  const Executor ex(cfg.workers);
  OutputRecord out;
  out.payload = nlohmann::json::object();
  out.payload["mode"] = to_string(cfg.mode);

  if (cfg.mode == Mode::synthetic) {
    const std::uint64_t budget = detail::require(cfg.budget, "a budget");
    const ChernoffSpec spec{cfg.epsilon, cfg.delta};
    const SyntheticRun s = synthetic_smart_estimate(cfg.population, spec, budget, cfg.master_seed, ex);
    detail::fill_smart(out, s.result);
    out.payload["population_mean"] = s.population_mean;
    out.payload["population_variance"] = s.population_variance;
    nlohmann::json dist = nlohmann::json::array();
    for (std::size_t i = 0; i < s.iterations.size(); ++i) {
      const SyntheticIteration& it = s.iterations[i];
      dist.push_back({{"iteration", it.index},
                      {"mean_true", it.mean_true},
                      {"max_true", it.max_true},
                      {"best_true", it.best_true},
                      {"true_histogram", it.true_histogram},
                      {"estimate_histogram", it.estimate_histogram}});
      out.payload["iterations"][i]["max_true"] = it.max_true;
      out.iterations[i].max_true = it.max_true;
    }
    out.payload["distributions"] = dist;
  } else {
    const Mdp mdp = cfg.model_text.empty() ? load_model(cfg.model_path) : parse_model(cfg.model_text);
    if (cfg.property.empty()) throw ConfigError("a property is required");
    const Formula formula = resolve_property(mdp, cfg.property);
    out.payload["horizon"] = horizon(formula);
    out.payload["formula"] = to_string(formula);

    switch (cfg.mode) {
      case Mode::smart_estimate: {
        const std::uint64_t budget = detail::require(cfg.budget, "a budget");
        const SmartRunResult r = smart_estimate(mdp, formula, ChernoffSpec{cfg.epsilon, cfg.delta}, budget,
                                                cfg.direction, cfg.cls, cfg.master_seed, ex);
        detail::fill_smart(out, r);
        break;
      }
      case Mode::simple_estimate: {
        const std::uint64_t m = detail::require(cfg.schedulers, "a scheduler count");
        const ChernoffSpec spec{cfg.epsilon, cfg.delta};
        const MultipleEstimateResult r = estimate_multiple(mdp, formula, spec, m, cfg.cls, cfg.master_seed, ex);
        out.payload["p_max"] = r.p_max;
        out.payload["p_min"] = r.p_min ? nlohmann::json(*r.p_min) : nlohmann::json(nullptr);
        out.payload["argmax_sigma"] = optional_sigma(r.argmax);
        out.payload["argmin_sigma"] = optional_sigma(r.argmin);
        out.payload["any_satisfied"] = r.any_satisfied;
        out.payload["sims_per_scheduler"] = r.sims_per_scheduler;
        out.payload["total_simulations"] = r.total_simulations;
        out.payload["deadlocked_traces"] = r.deadlocked_traces;
        out.payload["outcome_digest"] = r.outcome_digest;
        nlohmann::json recs = nlohmann::json::array();
        std::vector<std::uint64_t> wins;
        for (const EstimateRecord& e : r.records) {
          recs.push_back({{"sigma", e.sigma.value}, {"successes", e.successes}, {"trials", e.trials}, {"estimate", e.estimate()}});
          wins.push_back(e.successes);
        }
        out.payload["records"] = recs;
        const IterationRecord it = detail::summarize(0, Stage::candidates, wins, r.sims_per_scheduler, cfg.epsilon, Direction::max);
        out.payload["iterations"] = nlohmann::json::array({to_json(it)});
        out.iterations.push_back(to_row(it));
        out.simulations = r.total_simulations;
        out.outcome = r.any_satisfied ? "estimated" : "no_satisfying_scheduler";
        out.summary_value = cfg.direction == Direction::max ? r.p_max : r.p_min.value_or(0.0);
        out.summary_confidence = it.confidence;
        out.exit_code = r.any_satisfied ? 0 : 1;
        break;
      }
      case Mode::smart_hypothesis: {
        const std::uint64_t budget = detail::require(cfg.budget, "a budget");
        const SprtSpec spec{cfg.theta, cfg.epsilon, cfg.alpha, cfg.beta};
        detail::fill_hypothesis(out, smart_hypothesis(mdp, formula, spec, budget, cfg.cls, cfg.master_seed, ex, cfg.direction));
        break;
      }
      case Mode::simple_hypothesis: {
        const std::uint64_t m = detail::require(cfg.schedulers, "a scheduler count");
        const SprtSpec spec{cfg.theta, cfg.epsilon, cfg.alpha, cfg.beta};
        detail::fill_hypothesis(out, hypothesis_multiple(mdp, formula, spec, m, cfg.cls, cfg.master_seed, ex, cfg.direction));
        break;
      }
      case Mode::oracle: {
        const OracleOptions opt{cfg.node_cap, cfg.exact};
        OracleResult r;
        switch (cfg.oracle_target) {
          case OracleTarget::optimum:
            r = cfg.cls == SchedulerClass::history ? exact_optimum_history(mdp, formula, cfg.direction, opt)
                                                   : exact_optimum_memoryless(mdp, formula, cfg.direction, opt);
            break;
          case OracleTarget::scheduler:
            if (!cfg.sigma) throw ConfigError("oracle scheduler target needs a scheduler id");
            r = exact_scheduler_probability(mdp, formula, SchedulerId{*cfg.sigma}, cfg.cls, opt);
            break;
          case OracleTarget::uniform:
            r = uniform_scheduler_probability(mdp, formula, opt);
            break;
        }
        out.payload.update(detail::oracle_json(r));
        out.outcome = "exact";
        out.summary_value = static_cast<double>(r.value);
        out.exit_code = 0;
        break;
      }
      case Mode::synthetic:
        break;
    }
  }
  out.config = config_echo(cfg);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, p) : std::string("nan");
}

inline constexpr const char* csv_header = "iteration,M_i,N_i,confidence,best_estimate,mean_estimate,max_true,stage";

inline nlohmann::json to_json(const OutputRecord& r) {
  return {{"config", r.config},
          {"result", r.payload},
          {"simulations", r.simulations},
          {"wall_seconds", r.wall_seconds},
          {"exit_code", r.exit_code}};
}

/// JSON object, or CSV with one row per iteration and a final summary row
/// (iteration = "summary", N_i = total simulations, best_estimate = final
/// value, stage = outcome).
inline std::string emit(const OutputRecord& r, OutputFormat format) {
  if (format == OutputFormat::json) return to_json(r).dump(2) + "\n";
  std::ostringstream os;
  os << csv_header << '\n';
  for (const IterationRow& it : r.iterations) {
    os << it.iteration << ',' << it.candidates << ',' << it.sims_per_candidate << ','
       << format_number(it.confidence) << ',' << format_number(it.best_estimate) << ','
       << format_number(it.mean_estimate) << ',' << (it.max_true ? format_number(*it.max_true) : "") << ','
       << it.stage << '\n';
  }
  os << "summary,," << r.simulations << ','
     << (r.summary_confidence ? format_number(*r.summary_confidence) : "") << ','
     << (r.summary_value ? format_number(*r.summary_value) : "") << ",,," << r.outcome << '\n';
  return os.str();
}

}  // namespace smc
