#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace smc;

namespace {

constexpr std::uint64_t kSeed = 0x5EEDull;

// Every scheduler has the same fixed success probability.
struct ConstantSampler {
  double p;
  void select(SchedulerId) {}
  bool trial(std::uint64_t seed) const { return unit_interval(prng_next(PrngState{seed}).value) < p; }
};

struct ConstantFactory {
  double p;
  ConstantSampler make() const { return ConstantSampler{p}; }
};

}  // namespace

TEST(Batch, IndependentOfWorkers) {
  const ModelSamplerFactory f{&test::fig3(), &test::fig3_property(), SchedulerClass::history, false};
  const auto slots = draw_schedulers(1, 2, 37);
  const BatchResult a = run_batch(f, Executor{1}, 1, 2, slots, 500, true);
  for (std::size_t w : {2u, 3u, 8u}) {
    const BatchResult b = run_batch(f, Executor{w}, 1, 2, slots, 500, true);
    EXPECT_EQ(a.successes, b.successes);
    EXPECT_EQ(a.outcomes, b.outcomes);
    EXPECT_EQ(a.digest, b.digest);
  }
}

TEST(Batch, RankSlots) {
  const std::vector<SchedulerId> slots{{5}, {3}, {9}, {3}};
  const std::vector<std::uint64_t> wins{2, 2, 7, 2};
  EXPECT_EQ(rank_slots(slots, wins), (std::vector<std::size_t>{2, 1, 3, 0}));
}

TEST(EstimateMultiple, EstimatesWithinEpsilonOfExact) {
  const Mdp& m = test::fig3();
  const Formula& f = test::fig3_property();
  const ChernoffSpec spec{0.01, 0.01};
  const MultipleEstimateResult r = estimate_multiple(m, f, spec, 300, SchedulerClass::history, kSeed, Executor{8});
  ASSERT_EQ(r.records.size(), 300u);
  EXPECT_EQ(r.sims_per_scheduler, chernoff_n_multi(spec, 300));
  EXPECT_EQ(r.total_simulations, 300 * r.sims_per_scheduler);
  EXPECT_TRUE(r.any_satisfied);
  for (const EstimateRecord& rec : r.records) {
    const OracleResult exact = exact_scheduler_probability(m, f, rec.sigma, SchedulerClass::history);
    EXPECT_NEAR(rec.estimate(), static_cast<double>(exact.value), 0.01) << rec.sigma.value;
    EXPECT_LE(rec.estimate(), r.p_max);
  }
  EXPECT_LE(r.p_max, static_cast<double>(test::fig3_history_max) + 0.01);
}

TEST(EstimateMultiple, SingleSchedulerUsesBaseChernoffBound) {
  const MultipleEstimateResult r =
      estimate_multiple(test::fig3(), test::fig3_property(), {0.01, 0.01}, 1, SchedulerClass::history, kSeed);
  EXPECT_EQ(r.sims_per_scheduler, 26492u);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.argmax, r.records[0].sigma);
}

TEST(EstimateMultiple, UnsatisfiableProperty) {
  const Formula never = bind(parse_property("X X s=2"), parse_model("var s:[0..2] init 0; [a] true -> (s'=1);"));
  const Mdp m = parse_model("var s:[0..2] init 0; [a] true -> (s'=1);");
  const MultipleEstimateResult r = estimate_multiple(m, never, {0.05, 0.05}, 10, SchedulerClass::history, kSeed);
  EXPECT_FALSE(r.any_satisfied);
  EXPECT_EQ(r.p_max, 0.0);
  EXPECT_FALSE(r.p_min);
}

TEST(HypothesisMultiple, AcceptsAndRejects) {
  const SprtSpec low{0.2, 0.01, 0.01, 0.01};
  const HypothesisResult a =
      hypothesis_multiple(test::fig3(), test::fig3_property(), low, 100, SchedulerClass::history, kSeed);
  EXPECT_EQ(a.verdict, HypothesisVerdict::accepted);
  ASSERT_TRUE(a.witness_sigma);
  EXPECT_GE(exact_scheduler_probability(test::fig3(), test::fig3_property(), *a.witness_sigma,
                                        SchedulerClass::history).value,
            0.2L);

  const SprtSpec high{0.5, 0.01, 0.01, 0.01};
  const HypothesisResult r =
      hypothesis_multiple(test::fig3(), test::fig3_property(), high, 100, SchedulerClass::history, kSeed);
  EXPECT_EQ(r.verdict, HypothesisVerdict::rejected_given_budget);
  EXPECT_FALSE(r.witness_sigma);
  EXPECT_EQ(r.schedulers_tested, 100u);
}

TEST(HypothesisMultiple, IndependentOfWorkers) {
  const SprtSpec spec{0.3, 0.01, 0.01, 0.01};
  const auto a = hypothesis_multiple(test::fig3(), test::fig3_property(), spec, 70, SchedulerClass::history, kSeed,
                                     Executor{1});
  const auto b = hypothesis_multiple(test::fig3(), test::fig3_property(), spec, 70, SchedulerClass::history, kSeed,
                                     Executor{6});
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.witness_sigma, b.witness_sigma);
  EXPECT_EQ(a.simulations_used, b.simulations_used);
  EXPECT_EQ(a.outcome_digest, b.outcome_digest);
}

TEST(SmartEstimate, Fig3History) {
  const SmartRunResult r = smart_estimate(test::fig3(), test::fig3_property(), {0.01, 0.01}, 100000,
                                          Direction::max, SchedulerClass::history, kSeed, Executor{8});
  ASSERT_TRUE(r.best_sigma);
  EXPECT_NEAR(r.estimate, static_cast<double>(test::fig3_history_max), 0.01);
  EXPECT_LE(r.confidence, 0.01);
  EXPECT_EQ(r.terminated_by, Termination::confidence_reached);
  ASSERT_GE(r.iterations.size(), 3u);
  EXPECT_EQ(r.iterations[0].stage, Stage::exploration);
  EXPECT_EQ(r.iterations[0].candidates, 317u);
  EXPECT_EQ(r.iterations[0].sims_per_candidate, 317u);
  EXPECT_EQ(r.iterations[1].stage, Stage::candidates);
  std::uint64_t total = 0;
  for (const auto& it : r.iterations) total += it.simulations;
  EXPECT_EQ(total, r.total_simulations);
}

TEST(SmartEstimate, Fig3Memoryless) {
  const SmartRunResult r = smart_estimate(test::fig3(), test::fig3_property(), {0.01, 0.01}, 100000,
                                          Direction::max, SchedulerClass::memoryless, kSeed, Executor{8});
  EXPECT_NEAR(r.estimate, static_cast<double>(test::fig3_memoryless_max), 0.01);
}

TEST(SmartEstimate, ChoiceMinimum) {
  const OracleResult exact = exact_optimum_history(test::choice(), test::choice_property(), Direction::min);
  const SmartRunResult r = smart_estimate(test::choice(), test::choice_property(), {0.01, 0.01}, 100000,
                                          Direction::min, SchedulerClass::history, kSeed, Executor{8});
  EXPECT_EQ(r.direction, Direction::min);
  EXPECT_NEAR(r.estimate, static_cast<double>(exact.value), 0.01);
}

TEST(SmartEstimate, BudgetTooSmall) {
  // ln(2/0.01)/(2 * 0.01^2) = 26491.6
  EXPECT_THROW(smart_estimate(test::fig3(), test::fig3_property(), {0.01, 0.01}, 26491, Direction::max,
                              SchedulerClass::history, kSeed),
               BudgetError);
  EXPECT_NO_THROW(smart_estimate(test::fig3(), test::fig3_property(), {0.01, 0.01}, 26492, Direction::max,
                                 SchedulerClass::history, kSeed));
}

TEST(SmartEstimate, RefinementHalvesAndKeepsTheBest) {
  const ModelSamplerFactory f{&test::fig3(), &test::fig3_property(), SchedulerClass::history, false};
  struct Seen {
    std::vector<SchedulerId> candidates;
    std::vector<std::uint64_t> successes;
    Stage stage;
  };
  std::vector<Seen> seen;
  const IterationObserver observe = [&](const IterationSnapshot& s) {
    seen.push_back({{s.candidates.begin(), s.candidates.end()}, {s.successes.begin(), s.successes.end()},
                    s.record.stage});
  };
  const SmartRunResult r =
      smart_estimate_with(f, {0.01, 0.01}, 100000, Direction::max, kSeed, Executor{4}, observe);
  ASSERT_EQ(seen.size(), r.iterations.size());
  for (std::size_t i = 3; i < seen.size(); ++i) {
    const Seen& prev = seen[i - 1];
    const Seen& cur = seen[i];
    ASSERT_EQ(cur.stage, Stage::refinement);
    EXPECT_LT(cur.candidates.size(), prev.candidates.size());
    EXPECT_EQ(cur.candidates.size(), (prev.candidates.size() + 1) / 2);
    // every kept candidate did at least as well as every dropped one
    const std::set<SchedulerId> kept(cur.candidates.begin(), cur.candidates.end());
    std::uint64_t worst_kept = UINT64_MAX, best_dropped = 0;
    for (std::size_t k = 0; k < prev.candidates.size(); ++k) {
      if (kept.count(prev.candidates[k])) {
        worst_kept = std::min(worst_kept, prev.successes[k]);
      } else {
        best_dropped = std::max(best_dropped, prev.successes[k]);
      }
    }
    EXPECT_GE(worst_kept, best_dropped);
  }
}

TEST(SmartEstimate, EmptyCandidatesWhenNothingSucceeds) {
  const SmartRunResult r = smart_estimate_with(ConstantFactory{0.0}, {0.01, 0.01}, 30000, Direction::max, kSeed);
  EXPECT_EQ(r.terminated_by, Termination::empty_candidates);
  EXPECT_FALSE(r.best_sigma);
  EXPECT_EQ(r.iterations.size(), 1u);
}

TEST(SmartEstimate, ReproducibleAcrossWorkers) {
  const auto run = [](std::size_t w) {
    return smart_estimate(test::choice(), test::choice_property(), {0.02, 0.05}, 20000, Direction::max,
                          SchedulerClass::history, kSeed, Executor{w});
  };
  const SmartRunResult a = run(1);
  for (std::size_t w : {2u, 8u}) {
    const SmartRunResult b = run(w);
    EXPECT_EQ(a.best_sigma, b.best_sigma);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.total_simulations, b.total_simulations);
    EXPECT_EQ(a.outcome_digest, b.outcome_digest);
  }
}

TEST(SmartHypothesis, Fig3) {
  const auto run = [](double theta) {
    return smart_hypothesis(test::fig3(), test::fig3_property(), {theta, 0.01, 0.01, 0.01}, 100000,
                            SchedulerClass::history, kSeed, Executor{8});
  };
  const HypothesisResult yes = run(0.2);
  EXPECT_EQ(yes.verdict, HypothesisVerdict::accepted);
  EXPECT_TRUE(yes.witness_sigma);
  const HypothesisResult no = run(0.5);
  EXPECT_NE(no.verdict, HypothesisVerdict::accepted);
  EXPECT_FALSE(no.witness_sigma);
}

TEST(SmartHypothesis, InitialBatchShape) {
  const HypothesisResult r = smart_hypothesis_with(ConstantFactory{1.0}, {0.95, 0.01, 0.01, 0.01}, 1000, kSeed);
  ASSERT_FALSE(r.iterations.empty());
  EXPECT_EQ(r.iterations[0].sims_per_candidate, 2u);
  EXPECT_EQ(r.iterations[0].candidates, 950u);
  EXPECT_EQ(r.verdict, HypothesisVerdict::accepted);
  EXPECT_TRUE(r.accepted_by_aggregate);

  const HypothesisResult s = smart_hypothesis_with(ConstantFactory{1.0}, {0.2, 0.01, 0.01, 0.01}, 1000, kSeed);
  EXPECT_EQ(s.iterations[0].sims_per_candidate, 5u);
  EXPECT_EQ(s.iterations[0].candidates, 200u);
}

TEST(SmartHypothesis, NothingSucceedsIsNotAccepted) {
  const HypothesisResult r = smart_hypothesis_with(ConstantFactory{0.0}, {0.3, 0.01, 0.01, 0.01}, 10000, kSeed);
  EXPECT_NE(r.verdict, HypothesisVerdict::accepted);
}

TEST(SmartHypothesis, MinimumDirectionUsesComplement) {
  // min over schedulers of fig3 is 0.1 * 0.9^4 = 0.06561... from a1, well below 0.5
  const HypothesisResult r = smart_hypothesis(test::fig3(), test::fig3_property(), {0.5, 0.01, 0.01, 0.01}, 100000,
                                              SchedulerClass::history, kSeed, Executor{8}, Direction::min);
  EXPECT_EQ(r.verdict, HypothesisVerdict::accepted);
}

TEST(SmartHypothesis, InvalidTheta) {
  for (double theta : {0.0, 0.005, 0.995, 1.0}) {
    EXPECT_THROW(smart_hypothesis(test::fig3(), test::fig3_property(), {theta, 0.01, 0.01, 0.01}, 1000,
                                  SchedulerClass::history, kSeed),
                 ConfigError);
  }
}
