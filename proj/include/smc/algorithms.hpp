#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smc/error.hpp"
#include "smc/model.hpp"
#include "smc/parallel.hpp"
#include "smc/property.hpp"
#include "smc/scheduler.hpp"
#include "smc/stats.hpp"

namespace smc {

// ---------------------------------------------------------------------------
// Sampler seam. A factory hands out one sampler per worker; a sampler is
// pointed at a scheduler with select() and then produces Bernoulli outcomes,
// one per probabilistic seed.

template <class S>
concept Sampler = requires(S s, SchedulerId id, std::uint64_t seed) {
  s.select(id);
  { s.trial(seed) } -> std::convertible_to<bool>;
};

template <class F>
concept SamplerFactory = requires(const F& f) {
  { f.make() } -> Sampler;
};

/// Simulates the model under a hash-defined scheduler. With `complement`
/// set the outcome is the verdict of the negated property.
class ModelSampler {
 public:
  ModelSampler(const Mdp& mdp, const Formula& formula, SchedulerClass cls, bool complement)
      : sim_(mdp, formula), cls_(cls), complement_(complement) {}

  void select(SchedulerId id) { sigma_ = id; }
  bool trial(std::uint64_t prob_seed) {
    const Verdict v = sim_.run(sigma_, prob_seed, cls_);
    deadlocks_ += v.deadlocked ? 1 : 0;
    return v.satisfied != complement_;
  }
  std::uint64_t deadlocks() const { return deadlocks_; }

 private:
  Simulator sim_;
  SchedulerClass cls_;
  bool complement_;
  SchedulerId sigma_{};
  std::uint64_t deadlocks_ = 0;
};

struct ModelSamplerFactory {
  const Mdp* mdp;
  const Formula* formula;
  SchedulerClass cls = SchedulerClass::history;
  bool complement = false;

  ModelSampler make() const { return ModelSampler(*mdp, *formula, cls, complement); }
};

// ---------------------------------------------------------------------------
// Batches: every (slot, replicate) pair is fixed before anything runs, and its
// probabilistic seed is a pure function of (master seed, batch, slot, sigma,
// replicate). Results are therefore independent of the worker count.

struct BatchResult {
  std::vector<std::uint64_t> successes;  // per slot
  std::vector<std::uint8_t> outcomes;    // slot-major, only when requested
  std::uint64_t digest = 0;              // order-independent hash of all outcomes
  std::uint64_t deadlocks = 0;
};

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t batch, std::uint64_t slot,
                                SchedulerId sigma, std::uint64_t replicate) {
  return mix_seed({master, batch, slot, sigma.value, replicate});
}

template <SamplerFactory F>
BatchResult run_batch(const F& factory, const Executor& ex, std::uint64_t master_seed,
                      std::uint64_t batch, std::span<const SchedulerId> slots,
                      std::uint64_t replicates, bool keep_outcomes = false) {
  BatchResult out;
  out.successes.assign(slots.size(), 0);
  if (keep_outcomes) out.outcomes.assign(slots.size() * replicates, 0);
  std::vector<std::uint64_t> digests(slots.size(), 0);
  std::vector<std::uint64_t> deadlocks(slots.size(), 0);

  ex.for_each_range(slots.size(), [&](std::size_t begin, std::size_t end) {
    auto sampler = factory.make();
    for (std::size_t slot = begin; slot < end; ++slot) {
      sampler.select(slots[slot]);
      std::uint64_t wins = 0;
      std::uint64_t digest = 0;
      std::uint64_t dead_before = 0;
      if constexpr (requires { sampler.deadlocks(); }) dead_before = sampler.deadlocks();
      for (std::uint64_t r = 0; r < replicates; ++r) {
        const std::uint64_t seed = trial_seed(master_seed, batch, slot, slots[slot], r);
        const bool ok = sampler.trial(seed);
        wins += ok ? 1 : 0;
        digest += prng_next(PrngState{seed ^ (ok ? 1u : 0u)}).value;
        if (keep_outcomes) out.outcomes[slot * replicates + r] = ok ? 1 : 0;
      }
      out.successes[slot] = wins;
      digests[slot] = digest;
      if constexpr (requires { sampler.deadlocks(); }) {
        deadlocks[slot] = sampler.deadlocks() - dead_before;
      }
    }
  });
  for (std::size_t i = 0; i < slots.size(); ++i) {
    out.digest += digests[i];
    out.deadlocks += deadlocks[i];
  }
  return out;
}

/// `count` scheduler ids drawn uniformly from the 64-bit seed space.
inline std::vector<SchedulerId> draw_schedulers(std::uint64_t master_seed, std::uint64_t stream,
                                                std::uint64_t count) {
  SplitMix64 gen(mix_seed({master_seed, stream, 0x5EED5u}));
  std::vector<SchedulerId> out(count);
  for (auto& id : out) id = SchedulerId{gen()};
  return out;
}

/// Slot order by descending successes, ties by ascending sigma, then slot.
inline std::vector<std::size_t> rank_slots(std::span<const SchedulerId> slots,
                                           std::span<const std::uint64_t> successes) {
  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (successes[a] != successes[b]) return successes[a] > successes[b];
    if (slots[a] != slots[b]) return slots[a] < slots[b];
    return a < b;
  });
  return order;
}

// Batch-key namespaces so that no two batches ever share seeds.
namespace batch_tag {
inline constexpr std::uint64_t simple_estimate = 0x1ull << 32;
inline constexpr std::uint64_t simple_hypothesis = 0x2ull << 32;
inline constexpr std::uint64_t smart_estimate = 0x3ull << 32;
inline constexpr std::uint64_t smart_hypothesis = 0x4ull << 32;
}  // namespace batch_tag

// ---------------------------------------------------------------------------
// Result types

enum class Direction { max, min };
enum class Stage { exploration, candidates, refinement };
enum class Termination { confidence_reached, empty_candidates, single_candidate_budget };
enum class HypothesisVerdict { accepted, rejected_given_budget, inconclusive_given_budget };

inline const char* to_string(Direction d) { return d == Direction::max ? "max" : "min"; }
inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::exploration: return "exploration";
    case Stage::candidates: return "candidates";
    case Stage::refinement: return "refinement";
  }
  return "?";
}
inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::confidence_reached: return "confidence_reached";
    case Termination::empty_candidates: return "empty_candidates";
    case Termination::single_candidate_budget: return "single_candidate_budget";
  }
  return "?";
}
inline const char* to_string(HypothesisVerdict v) {
  switch (v) {
    case HypothesisVerdict::accepted: return "accepted";
    case HypothesisVerdict::rejected_given_budget: return "rejected_given_budget";
    case HypothesisVerdict::inconclusive_given_budget: return "inconclusive_given_budget";
  }
  return "?";
}

struct EstimateRecord {
  SchedulerId sigma;
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  double estimate() const {
    return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  }
};

struct IterationRecord {
  std::size_t index = 0;
  Stage stage = Stage::refinement;
  std::uint64_t candidates = 0;          // M_i
  std::uint64_t sims_per_candidate = 0;  // N_i
  double confidence = 1.0;
  double best_estimate = 0.0;
  double mean_estimate = 0.0;
  std::uint64_t simulations = 0;  // simulations charged to this iteration
};

struct SmartRunResult {
  std::optional<SchedulerId> best_sigma;
  double estimate = 0.0;
  Direction direction = Direction::max;
  std::vector<IterationRecord> iterations;
  std::uint64_t total_simulations = 0;
  Termination terminated_by = Termination::confidence_reached;
  double confidence = 1.0;
  std::uint64_t deadlocked_traces = 0;
  std::uint64_t outcome_digest = 0;
};

struct MultipleEstimateResult {
  std::vector<EstimateRecord> records;
  double p_max = 0.0;
  std::optional<double> p_min;  // smallest non-zero estimate
  std::optional<SchedulerId> argmax;
  std::optional<SchedulerId> argmin;
  bool any_satisfied = false;
  std::uint64_t sims_per_scheduler = 0;
  std::uint64_t total_simulations = 0;
  std::uint64_t deadlocked_traces = 0;
  std::uint64_t outcome_digest = 0;
};

struct HypothesisResult {
  HypothesisVerdict verdict = HypothesisVerdict::inconclusive_given_budget;
  std::optional<SchedulerId> witness_sigma;  // present iff accepted
  bool accepted_by_aggregate = false;
  std::uint64_t simulations_used = 0;
  std::uint64_t schedulers_tested = 0;
  std::vector<IterationRecord> iterations;
  std::uint64_t deadlocked_traces = 0;
  std::uint64_t outcome_digest = 0;
};

/// Per-iteration view handed to observers (the synthetic harness uses it to
/// record candidate distributions).
struct IterationSnapshot {
  const IterationRecord& record;
  std::span<const SchedulerId> candidates;
  std::span<const std::uint64_t> successes;
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

namespace detail {

inline std::uint64_t ceil_sqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while (r * r < n) ++r;
  return r;
}

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Smallest n with candidate_confidence(n, m, eps) <= delta.
inline std::uint64_t sims_for_confidence(std::uint64_t m, const ChernoffSpec& spec) {
  const long double eps = spec.epsilon;
  const long double tail = root_complement(spec.delta, static_cast<long double>(m));
  auto n = static_cast<std::uint64_t>(std::max(1.0L, std::ceil(-std::log(tail) / (2 * eps * eps))));
  while (n > 1 && candidate_confidence(n - 1, m, spec.epsilon) <= spec.delta) --n;
  while (candidate_confidence(n, m, spec.epsilon) > spec.delta) ++n;
  return n;
}

inline double reported(double p, Direction d) { return d == Direction::max ? p : 1.0 - p; }

inline IterationRecord summarize(std::size_t index, Stage stage, std::span<const std::uint64_t> wins,
                                 std::uint64_t n, double epsilon, Direction dir) {
  IterationRecord rec;
  rec.index = index;
  rec.stage = stage;
  rec.candidates = wins.size();
  rec.sims_per_candidate = n;
  rec.simulations = wins.size() * n;
  rec.confidence = wins.empty() ? 1.0 : candidate_confidence(n, wins.size(), epsilon);
  if (!wins.empty() && n > 0) {
    const std::uint64_t best = *std::max_element(wins.begin(), wins.end());
    const std::uint64_t total = std::accumulate(wins.begin(), wins.end(), std::uint64_t{0});
    rec.best_estimate = reported(static_cast<double>(best) / static_cast<double>(n), dir);
    rec.mean_estimate = reported(
        static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(wins.size())), dir);
  }
  return rec;
}

template <class T>
std::vector<T> pick(std::span<const T> from, std::span<const std::size_t> order, std::size_t count) {
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(from[order[i]]);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Estimation with M uniformly drawn schedulers, N Chernoff-sized runs each.

template <SamplerFactory F>
MultipleEstimateResult estimate_multiple_with(const F& factory, const ChernoffSpec& spec,
                                              std::uint64_t schedulers, std::uint64_t master_seed,
                                              const Executor& ex = Executor{}) {
  if (schedulers < 1) throw ConfigError("scheduler count must be at least 1");
  const std::uint64_t n = chernoff_n_multi(spec, schedulers);
  const auto slots = draw_schedulers(master_seed, batch_tag::simple_estimate, schedulers);
  const BatchResult batch = run_batch(factory, ex, master_seed, batch_tag::simple_estimate, slots, n);

  MultipleEstimateResult out;
  out.sims_per_scheduler = n;
  out.total_simulations = n * schedulers;
  out.deadlocked_traces = batch.deadlocks;
  out.outcome_digest = batch.digest;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    EstimateRecord rec{slots[i], batch.successes[i], n};
    const double p = rec.estimate();
    if (!out.argmax || p > out.p_max) {
      out.p_max = p;
      out.argmax = rec.sigma;
    }
    if (p > 0 && (!out.p_min || p < *out.p_min)) {
      out.p_min = p;
      out.argmin = rec.sigma;
    }
    out.records.push_back(rec);
  }
  out.any_satisfied = out.p_max > 0;
  return out;
}

// ---------------------------------------------------------------------------
// SPRT over up to M schedulers with corrected error bounds. Tests
// H0: P >= theta + eps; returns as soon as one scheduler's test accepts it.

struct SprtOutcome {
  bool accepted = false;
  bool decided = false;
  std::uint64_t simulations = 0;
};

template <SamplerFactory F>
HypothesisResult hypothesis_multiple_with(const F& factory, const SprtSpec& spec,
                                          std::uint64_t schedulers, std::uint64_t master_seed,
                                          const Executor& ex = Executor{},
                                          std::uint64_t max_sims_per_scheduler = 10'000'000) {
  spec.validate();
  if (schedulers < 1) throw ConfigError("scheduler count must be at least 1");
  const double alpha_m = multi_test_correction(spec.alpha, schedulers);
  const double beta_m = multi_test_correction(spec.beta, schedulers);
  const SprtBounds bounds = sprt_bounds(alpha_m, beta_m);
  const auto slots = draw_schedulers(master_seed, batch_tag::simple_hypothesis, schedulers);
  const std::uint64_t batch = batch_tag::simple_hypothesis;

  // Fixed wave size keeps the set of executed simulations independent of workers.
  constexpr std::size_t wave = 32;
  HypothesisResult out;
  out.verdict = HypothesisVerdict::rejected_given_budget;

  for (std::size_t first = 0; first < slots.size(); first += wave) {
    const std::size_t count = std::min(wave, slots.size() - first);
    std::vector<SprtOutcome> results(count);
    std::vector<std::uint64_t> digests(count, 0);
    std::vector<std::uint64_t> deadlocks(count, 0);
    ex.for_each_range(count, [&](std::size_t begin, std::size_t end) {
      auto sampler = factory.make();
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t slot = first + k;
        sampler.select(slots[slot]);
        std::uint64_t dead_before = 0;
        if constexpr (requires { sampler.deadlocks(); }) dead_before = sampler.deadlocks();
        SprtRatio ratio(spec.p0(), spec.p1());
        SprtOutcome& res = results[k];
        while (res.simulations < max_sims_per_scheduler) {
          const std::uint64_t seed = trial_seed(master_seed, batch, slot, slots[slot], res.simulations);
          const bool ok = sampler.trial(seed);
          digests[k] += prng_next(PrngState{seed ^ (ok ? 1u : 0u)}).value;
          ++res.simulations;
          ratio.observe(ok);
          if (ratio.accepts_h0(bounds)) {
            res.accepted = res.decided = true;
            break;
          }
          if (ratio.accepts_h1(bounds)) {
            res.decided = true;
            break;
          }
        }
        if constexpr (requires { sampler.deadlocks(); }) {
          deadlocks[k] = sampler.deadlocks() - dead_before;
        }
      }
    });
    for (std::size_t k = 0; k < count; ++k) {
      out.outcome_digest += digests[k];
      out.deadlocked_traces += deadlocks[k];
    }
    for (std::size_t k = 0; k < count; ++k) {
      out.simulations_used += results[k].simulations;
      ++out.schedulers_tested;
      if (results[k].accepted) {
        out.verdict = HypothesisVerdict::accepted;
        out.witness_sigma = slots[first + k];
        return out;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Smart estimation: (i) undirected exploration with N = M = ceil(sqrt(budget)),
// (ii) candidate generation sized from the exploration maximum, (iii) repeated
// refinement that keeps the better half until the multi-estimate Chernoff
// confidence reaches delta. Maximizes the sampler's outcome probability;
// `dir` only selects how estimates are reported (min runs are handed a
// complemented sampler and report 1 - p).

template <SamplerFactory F>
SmartRunResult smart_estimate_with(const F& factory, const ChernoffSpec& spec, std::uint64_t budget,
                                   Direction dir, std::uint64_t master_seed,
                                   const Executor& ex = Executor{},
                                   const IterationObserver& observe = {}) {
  spec.validate();
  const long double eps = spec.epsilon;
  const long double floor = (std::log(2.0L) - std::log(static_cast<long double>(spec.delta))) / (2 * eps * eps);
  if (!(static_cast<long double>(budget) > floor)) {
    throw BudgetError("per-iteration budget " + std::to_string(budget) +
                      " must exceed ln(2/delta)/(2 epsilon^2) = " + std::to_string(static_cast<double>(floor)));
  }

  SmartRunResult out;
  out.direction = dir;
  const std::uint64_t tag = batch_tag::smart_estimate;
  std::size_t iteration = 0;

  auto record = [&](IterationRecord rec, std::span<const SchedulerId> cands,
                    std::span<const std::uint64_t> wins) {
    out.total_simulations += rec.simulations;
    out.iterations.push_back(rec);
    if (observe) observe(IterationSnapshot{out.iterations.back(), cands, wins});
  };
  auto absorb = [&](const BatchResult& b) {
    out.deadlocked_traces += b.deadlocks;
    out.outcome_digest += b.digest;
  };

  // (i) exploration
  const std::uint64_t n0 = detail::ceil_sqrt(budget);
  const auto explore = draw_schedulers(master_seed, tag | 0, n0);
  const BatchResult b0 = run_batch(factory, ex, master_seed, tag | 0, explore, n0);
  absorb(b0);
  record(detail::summarize(iteration++, Stage::exploration, b0.successes, n0, spec.epsilon, dir),
         explore, b0.successes);
  const auto rank0 = rank_slots(explore, b0.successes);
  const std::uint64_t best0 = b0.successes[rank0.front()];
  out.best_sigma = explore[rank0.front()];
  out.estimate = detail::reported(static_cast<double>(best0) / static_cast<double>(n0), dir);
  out.confidence = out.iterations.back().confidence;
  if (best0 == 0) {
    out.best_sigma.reset();
    out.terminated_by = Termination::empty_candidates;
    return out;
  }

  // (ii) candidate generation
  const BudgetSplit split = budget_split(best0, n0, budget);
  const auto fresh = draw_schedulers(master_seed, tag | 1, split.schedulers);
  const BatchResult b1 =
      run_batch(factory, ex, master_seed, tag | 1, fresh, split.sims_per_scheduler);
  absorb(b1);
  record(detail::summarize(iteration++, Stage::candidates, b1.successes, split.sims_per_scheduler,
                           spec.epsilon, dir),
         fresh, b1.successes);
  std::vector<SchedulerId> candidates;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    if (b1.successes[i] > 0) candidates.push_back(fresh[i]);
  }
  if (candidates.empty()) {
    out.terminated_by = Termination::empty_candidates;
    return out;
  }

  // (iii) refinement
  double conf = 1.0;
  std::uint64_t last_m = 0;
  while (conf > spec.delta && !candidates.empty()) {
    const std::uint64_t m = candidates.size();
    const std::uint64_t n = std::min(detail::ceil_div(budget, m), detail::sims_for_confidence(m, spec));
    const std::uint64_t key = tag | (iteration + 1);
    const BatchResult b = run_batch(factory, ex, master_seed, key, candidates, n);
    absorb(b);
    IterationRecord rec = detail::summarize(iteration++, Stage::refinement, b.successes, n, spec.epsilon, dir);
    conf = rec.confidence;
    record(rec, candidates, b.successes);

    const auto order = rank_slots(candidates, b.successes);
    out.best_sigma = candidates[order.front()];
    out.estimate = rec.best_estimate;
    out.confidence = conf;
    last_m = m;
    const std::size_t keep = detail::ceil_div(m, 2);
    candidates = detail::pick<SchedulerId>(candidates, order, keep);
  }
  out.terminated_by = last_m == 1 ? Termination::single_candidate_budget : Termination::confidence_reached;
  return out;
}

// ---------------------------------------------------------------------------
// Smart hypothesis testing of H0: some scheduler has P >= theta (+ eps).
//
// Orientation: ratio = L(p1)/L(p0) with p0 = theta+eps, p1 = theta-eps.
// H0 is accepted when ratio <= B = beta/(1-alpha) and H1 when ratio >= A =
// (1-beta)/alpha (Wald). The aggregate test over all simulations of an
// iteration uses (alpha, beta); each candidate's own test uses the
// multiple-test corrected (alpha_M, beta_M). The run is rejected (given the
// budget) when the best candidate of an iteration has crossed its H1 bound.

template <SamplerFactory F>
HypothesisResult smart_hypothesis_with(const F& factory, const SprtSpec& spec, std::uint64_t budget,
                                       std::uint64_t master_seed, const Executor& ex = Executor{}) {
  spec.validate();
  if (budget < 1) throw ConfigError("budget must be at least 1");
  const std::uint64_t tag = batch_tag::smart_hypothesis;
  const SprtBounds bounds = sprt_bounds(spec.alpha, spec.beta);
  HypothesisResult out;

  auto absorb = [&](const BatchResult& b) {
    out.deadlocked_traces += b.deadlocks;
    out.outcome_digest += b.digest;
  };
  auto snap = [](long double x) {
    return std::fabs(x - std::round(x)) <= 1e-12L * x ? std::round(x) : x;
  };

  // candidate generation sized by theta
  const auto n = static_cast<std::uint64_t>(std::ceil(snap(1.0L / spec.theta)));
  const auto m = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::ceil(snap(static_cast<long double>(spec.theta) * budget))));
  const auto fresh = draw_schedulers(master_seed, tag | 0, m);
  const BatchResult b0 = run_batch(factory, ex, master_seed, tag | 0, fresh, n);
  absorb(b0);
  out.simulations_used = n * m;
  out.schedulers_tested = m;
  out.iterations.push_back(detail::summarize(0, Stage::candidates, b0.successes, n, spec.epsilon, Direction::max));

  const auto rank0 = rank_slots(fresh, b0.successes);
  const std::uint64_t total0 = std::accumulate(b0.successes.begin(), b0.successes.end(), std::uint64_t{0});
  SprtRatio pooled(spec.p0(), spec.p1());
  pooled.observe(total0, n * m - total0);
  if (pooled.accepts_h0(bounds)) {
    out.verdict = HypothesisVerdict::accepted;
    out.accepted_by_aggregate = true;
    out.witness_sigma = fresh[rank0.front()];
    return out;
  }

  std::vector<SchedulerId> candidates;
  for (std::size_t i : rank0) {
    if (b0.successes[i] > 0) candidates.push_back(fresh[i]);
  }

  std::uint64_t previous = candidates.size() + 1;
  std::size_t iteration = 1;
  while (previous > 1 && !candidates.empty()) {
    const std::uint64_t mi = candidates.size();
    const SprtBounds corrected =
        sprt_bounds(multi_test_correction(spec.alpha, mi), multi_test_correction(spec.beta, mi));
    const std::uint64_t ni = detail::ceil_div(budget, mi);
    const BatchResult b = run_batch(factory, ex, master_seed, tag | iteration, candidates, ni, true);
    absorb(b);

    // Replay in the canonical sequential order to find the first decision.
    pooled.reset();
    std::uint64_t used = 0;
    std::optional<std::size_t> witness;
    bool by_aggregate = false;
    std::size_t leader = 0;
    std::uint64_t leader_wins = 0;
    for (std::size_t i = 0; i < mi && !witness; ++i) {
      SprtRatio own(spec.p0(), spec.p1());
      std::uint64_t wins = 0;
      for (std::uint64_t j = 0; j < ni; ++j) {
        const bool ok = b.outcomes[i * ni + j] != 0;
        wins += ok ? 1 : 0;
        ++used;
        pooled.observe(ok);
        own.observe(ok);
        if (wins > leader_wins || (wins == leader_wins && i != leader && candidates[i] < candidates[leader])) {
          leader = i;
          leader_wins = wins;
        }
        if (own.accepts_h0(corrected)) {
          witness = i;
          break;
        }
        if (pooled.accepts_h0(bounds)) {
          witness = leader;
          by_aggregate = true;
          break;
        }
      }
    }
    out.simulations_used += used;
    IterationRecord rec = detail::summarize(iteration, Stage::refinement, b.successes, ni, spec.epsilon, Direction::max);
    rec.simulations = used;
    out.iterations.push_back(rec);
    if (witness) {
      out.verdict = HypothesisVerdict::accepted;
      out.accepted_by_aggregate = by_aggregate;
      out.witness_sigma = candidates[*witness];
      return out;
    }

    const auto order = rank_slots(candidates, b.successes);
    SprtRatio best(spec.p0(), spec.p1());
    const std::uint64_t best_wins = b.successes[order.front()];
    best.observe(best_wins, ni - best_wins);
    if (best.accepts_h1(corrected)) {
      out.verdict = HypothesisVerdict::rejected_given_budget;
      return out;
    }
    candidates = detail::pick<SchedulerId>(candidates, order, detail::ceil_div(mi, 2));
    previous = mi;
    ++iteration;
  }
  out.verdict = HypothesisVerdict::inconclusive_given_budget;
  return out;
}

// ---------------------------------------------------------------------------
// Model-level entry points. Minimization and "P <= theta" hypotheses run the
// maximizing algorithms on the complemented property.

inline MultipleEstimateResult estimate_multiple(const Mdp& mdp, const Formula& formula,
                                                const ChernoffSpec& spec, std::uint64_t schedulers,
                                                SchedulerClass cls, std::uint64_t master_seed,
                                                const Executor& ex = Executor{}) {
  return estimate_multiple_with(ModelSamplerFactory{&mdp, &formula, cls, false}, spec, schedulers,
                                master_seed, ex);
}

inline SprtSpec complemented(SprtSpec spec) {
  spec.theta = 1.0 - spec.theta;
  return spec;
}

inline HypothesisResult hypothesis_multiple(const Mdp& mdp, const Formula& formula, const SprtSpec& spec,
                                            std::uint64_t schedulers, SchedulerClass cls,
                                            std::uint64_t master_seed, const Executor& ex = Executor{},
                                            Direction dir = Direction::max) {
  const bool flip = dir == Direction::min;
  return hypothesis_multiple_with(ModelSamplerFactory{&mdp, &formula, cls, flip},
                                  flip ? complemented(spec) : spec, schedulers, master_seed, ex);
}

inline SmartRunResult smart_estimate(const Mdp& mdp, const Formula& formula, const ChernoffSpec& spec,
                                     std::uint64_t budget, Direction dir, SchedulerClass cls,
                                     std::uint64_t master_seed, const Executor& ex = Executor{}) {
  return smart_estimate_with(ModelSamplerFactory{&mdp, &formula, cls, dir == Direction::min}, spec,
                             budget, dir, master_seed, ex);
}

inline HypothesisResult smart_hypothesis(const Mdp& mdp, const Formula& formula, const SprtSpec& spec,
                                         std::uint64_t budget, SchedulerClass cls, std::uint64_t master_seed,
                                         const Executor& ex = Executor{}, Direction dir = Direction::max) {
  const bool flip = dir == Direction::min;
  return smart_hypothesis_with(ModelSamplerFactory{&mdp, &formula, cls, flip},
                               flip ? complemented(spec) : spec, budget, master_seed, ex);
}

}  // namespace smc
