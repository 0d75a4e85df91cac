#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smc/algorithms.hpp"
#include "smc/error.hpp"
#include "smc/parallel.hpp"
#include "smc/scheduler.hpp"
#include "smc/stats.hpp"

// Virtual scheduler populations: each scheduler id maps deterministically to a
// Bernoulli success probability, so the smart-sampling stages can be studied
// without a model.

namespace smc {

enum class PopulationKind { linear, exponential, explicit_list };

inline const char* to_string(PopulationKind k) {
  switch (k) {
    case PopulationKind::linear: return "linear";
    case PopulationKind::exponential: return "exponential";
    case PopulationKind::explicit_list: return "explicit";
  }
  return "?";
}

/// With probability `mass` a scheduler's success probability is drawn from a
/// density on [0, p_max] that falls to zero at p_max; otherwise it is 0.
///   linear:      f(p) ~ p_max - p
///   exponential: f(p) ~ exp(-rate p) - exp(-rate p_max)
/// An explicit list is sampled uniformly instead (mass and p_max are unused).
struct SyntheticPopulation {
  PopulationKind kind = PopulationKind::exponential;
  double p_max = 0.2;
  double rate = 25.0;
  double mass = 0.0144;
  std::vector<double> probabilities;

  static SyntheticPopulation linear(double p_max, double mass = 0.0144) {
    return {PopulationKind::linear, p_max, 0.0, mass, {}};
  }
  static SyntheticPopulation exponential(double p_max, double rate = 25.0, double mass = 0.0144) {
    return {PopulationKind::exponential, p_max, rate, mass, {}};
  }
  static SyntheticPopulation explicit_list(std::vector<double> probs) {
    return {PopulationKind::explicit_list, 0.0, 0.0, 1.0, std::move(probs)};
  }

  void validate() const {
    if (kind == PopulationKind::explicit_list) {
      if (probabilities.empty()) throw ConfigError("explicit population is empty");
      for (double p : probabilities) {
        if (!(p >= 0 && p <= 1)) throw ConfigError("population probabilities must lie in [0,1]");
      }
      return;
    }
    if (!(p_max > 0 && p_max <= 1)) throw ConfigError("p_max must lie in (0,1]");
    if (!(mass >= 0 && mass <= 1)) throw ConfigError("mass must lie in [0,1]");
    if (kind == PopulationKind::exponential && !(rate > 0)) throw ConfigError("rate must be positive");
  }

  /// Success probability of the virtual scheduler sigma.
  double probability(SchedulerId sigma) const {
    SplitMix64 gen(sigma.value);
    if (kind == PopulationKind::explicit_list) return probabilities[gen.below(probabilities.size())];
    if (!(gen.uniform() < mass)) return 0.0;
    return quantile(gen.uniform());
  }

  /// Inverse CDF of the non-zero part.
  double quantile(double u) const {
    const long double a = p_max;
    if (kind == PopulationKind::linear) return static_cast<double>(a * (1 - std::sqrt(1 - static_cast<long double>(u))));
    const long double z = cdf_numerator(a);
    const long double target = static_cast<long double>(u) * z;
    long double lo = 0;
    long double hi = a;
    for (int i = 0; i < 100; ++i) {
      const long double mid = (lo + hi) / 2;
      (cdf_numerator(mid) < target ? lo : hi) = mid;
    }
    return static_cast<double>((lo + hi) / 2);
  }

  /// Mean over the whole population, zero-probability part included.
  double mean() const {
    if (kind == PopulationKind::explicit_list) {
      long double s = 0;
      for (double p : probabilities) s += p;
      return static_cast<double>(s / static_cast<long double>(probabilities.size()));
    }
    const long double a = p_max;
    if (kind == PopulationKind::linear) return static_cast<double>(mass * a / 3);
    const long double l = rate;
    const long double tail = std::exp(-l * a);
    const long double first = (1 - tail * (1 + l * a)) / (l * l) - a * a * tail / 2;
    return static_cast<double>(mass * first / cdf_numerator(a));
  }

  /// Variance over the whole population.
  double variance() const {
    if (kind == PopulationKind::explicit_list) {
      const long double m = mean();
      long double s = 0;
      for (double p : probabilities) s += (p - m) * (p - m);
      return static_cast<double>(s / static_cast<long double>(probabilities.size()));
    }
    const long double a = p_max;
    const long double m = mean();
    long double second = 0;
    if (kind == PopulationKind::linear) {
      second = a * a / 6;
    } else {
      const long double l = rate;
      const long double tail = std::exp(-l * a);
      // integral of p^2 exp(-l p) over [0, a]
      const long double i2 = (2 - tail * (l * l * a * a + 2 * l * a + 2)) / (l * l * l);
      second = (i2 - a * a * a * tail / 3) / cdf_numerator(a);
    }
    return static_cast<double>(mass * second - m * m);
  }

 private:
  // Unnormalized CDF of the exponential-type density.
  long double cdf_numerator(long double p) const {
    const long double l = rate;
    return -std::expm1(-l * p) / l - p * std::exp(-l * static_cast<long double>(p_max));
  }
};

class SyntheticSampler {
 public:
  explicit SyntheticSampler(const SyntheticPopulation& pop) : pop_(&pop) {}

  void select(SchedulerId id) { p_ = pop_->probability(id); }
  bool trial(std::uint64_t prob_seed) const { return unit_interval(prng_next(PrngState{prob_seed}).value) < p_; }

 private:
  const SyntheticPopulation* pop_;
  double p_ = 0;
};

struct SyntheticSamplerFactory {
  const SyntheticPopulation* population;

  SyntheticSampler make() const { return SyntheticSampler(*population); }
};

/// Per-iteration view of the candidate set, using the known true probabilities.
struct SyntheticIteration {
  std::size_t index = 0;
  Stage stage = Stage::refinement;
  std::uint64_t candidates = 0;
  double mean_true = 0;  // mean true probability over the candidates
  double max_true = 0;   // highest true probability among the candidates
  double best_true = 0;  // true probability of the top-ranked candidate
  std::vector<std::uint64_t> true_histogram;      // counts over [0,1] in equal bins
  std::vector<std::uint64_t> estimate_histogram;  // same bins, for the estimates
};

struct SyntheticRun {
  SmartRunResult result;
  std::vector<SyntheticIteration> iterations;
  double population_mean = 0;
  double population_variance = 0;
};

inline SyntheticRun synthetic_smart_estimate(const SyntheticPopulation& pop, const ChernoffSpec& spec,
                                             std::uint64_t budget, std::uint64_t master_seed,
                                             const Executor& ex = Executor{}, std::size_t bins = 50) {
  pop.validate();
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  SyntheticRun run;
  run.population_mean = pop.mean();
  run.population_variance = pop.variance();
  auto bin_of = [&](double p) { return std::min(bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins))); };

  const IterationObserver observe = [&](const IterationSnapshot& snap) {
    SyntheticIteration it;
    it.index = snap.record.index;
    it.stage = snap.record.stage;
    it.candidates = snap.candidates.size();
    it.true_histogram.assign(bins, 0);
    it.estimate_histogram.assign(bins, 0);
    long double sum = 0;
    std::uint64_t best_wins = 0;
    SchedulerId best{};
    const double n = static_cast<double>(snap.record.sims_per_candidate);
    for (std::size_t i = 0; i < snap.candidates.size(); ++i) {
      const double p = pop.probability(snap.candidates[i]);
      sum += p;
      it.max_true = std::max(it.max_true, p);
      ++it.true_histogram[bin_of(p)];
      ++it.estimate_histogram[bin_of(static_cast<double>(snap.successes[i]) / n)];
      const std::uint64_t w = snap.successes[i];
      if (i == 0 || w > best_wins || (w == best_wins && snap.candidates[i] < best)) {
        best_wins = w;
        best = snap.candidates[i];
      }
    }
    if (!snap.candidates.empty()) {
      it.mean_true = static_cast<double>(sum / static_cast<long double>(snap.candidates.size()));
      it.best_true = pop.probability(best);
    }
    run.iterations.push_back(std::move(it));
  };

  run.result = smart_estimate_with(SyntheticSamplerFactory{&pop}, spec, budget, Direction::max, master_seed,
                                   ex, observe);
  return run;
}

}  // namespace smc
