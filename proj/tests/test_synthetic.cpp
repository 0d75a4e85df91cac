#include <gtest/gtest.h>

#include "support.hpp"

using namespace smc;

TEST(Population, QuantileMonotoneAndBounded) {
  for (const SyntheticPopulation& pop :
       {SyntheticPopulation::exponential(0.2), SyntheticPopulation::linear(0.5), SyntheticPopulation::exponential(1.0, 3.0)}) {
    double prev = 0;
    for (int i = 0; i <= 1000; ++i) {
      const double q = pop.quantile(i / 1000.0);
      EXPECT_GE(q, prev - 1e-15);
      EXPECT_LE(q, pop.p_max + 1e-15);
      prev = q;
    }
    EXPECT_NEAR(pop.quantile(0.0), 0.0, 1e-12);
    // the density vanishes at p_max, so the inverse is only accurate to about sqrt(ulp)
    EXPECT_NEAR(pop.quantile(1.0), pop.p_max, 1e-8);
  }
}

TEST(Population, AnalyticMomentsMatchSampling) {
  for (const SyntheticPopulation& pop :
       {SyntheticPopulation::exponential(0.2), SyntheticPopulation::linear(0.3, 0.5),
        SyntheticPopulation::explicit_list({0.1, 0.2, 0.7})}) {
    const int n = 2'000'000;
    long double sum = 0, sq = 0;
    SplitMix64 gen(4);
    for (int i = 0; i < n; ++i) {
      const double p = pop.probability(SchedulerId{gen()});
      sum += p;
      sq += static_cast<long double>(p) * p;
    }
    const double mean = static_cast<double>(sum / n);
    const double var = static_cast<double>(sq / n - (sum / n) * (sum / n));
    EXPECT_NEAR(mean, pop.mean(), 4 * std::sqrt(pop.variance() / n));
    EXPECT_NEAR(var, pop.variance(), 0.02 * pop.variance());
  }
}

TEST(Population, MassControlsZeroFraction) {
  const SyntheticPopulation pop = SyntheticPopulation::exponential(0.2);
  int nonzero = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) nonzero += pop.probability(SchedulerId{static_cast<std::uint64_t>(i) * 7777}) > 0 ? 1 : 0;
  EXPECT_NEAR(nonzero / static_cast<double>(n), 0.0144, 4 * std::sqrt(0.0144 * 0.9856 / n));
}

TEST(Population, Validation) {
  EXPECT_THROW(SyntheticPopulation::exponential(0.0).validate(), ConfigError);
  EXPECT_THROW(SyntheticPopulation::exponential(0.2, -1.0).validate(), ConfigError);
  EXPECT_THROW(SyntheticPopulation::linear(0.2, 1.5).validate(), ConfigError);
  EXPECT_THROW(SyntheticPopulation::explicit_list({}).validate(), ConfigError);
  EXPECT_THROW(SyntheticPopulation::explicit_list({0.5, 1.2}).validate(), ConfigError);
}

TEST(SyntheticRun, SingleGoodSchedulerAmongThousand) {
  std::vector<double> probs(999, 0.0);
  probs.push_back(0.9);
  const SyntheticPopulation pop = SyntheticPopulation::explicit_list(probs);
  // Exploration draws 1000 schedulers, so the good one is missed with
  // probability 0.999^1000 = 0.37; this seed finds it.
  const SyntheticRun run = synthetic_smart_estimate(pop, {0.01, 0.01}, 1'000'000, 3, Executor{8});
  ASSERT_FALSE(run.iterations.empty());
  EXPECT_EQ(run.iterations[0].max_true, 0.9);
  ASSERT_TRUE(run.result.best_sigma);
  EXPECT_EQ(pop.probability(*run.result.best_sigma), 0.9);
  EXPECT_NEAR(run.result.estimate, 0.9, 0.01);
  EXPECT_LE(run.result.confidence, 0.01);
}

TEST(SyntheticRun, MissingTheGoodSchedulerEndsWithoutCandidates) {
  std::vector<double> probs(999, 0.0);
  probs.push_back(0.9);
  const SyntheticPopulation pop = SyntheticPopulation::explicit_list(probs);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticRun run = synthetic_smart_estimate(pop, {0.01, 0.01}, 1'000'000, seed, Executor{8});
    if (run.iterations[0].max_true == 0.0) {
      EXPECT_EQ(run.result.terminated_by, Termination::empty_candidates);
      EXPECT_FALSE(run.result.best_sigma);
      return;
    }
  }
  GTEST_SKIP() << "no seed below 20 missed the good scheduler";
}

TEST(SyntheticRun, IdenticalProbabilities) {
  const SyntheticPopulation pop = SyntheticPopulation::explicit_list({0.3});
  const SyntheticRun run = synthetic_smart_estimate(pop, {0.01, 0.01}, 100000, 1, Executor{4});
  EXPECT_NEAR(run.result.estimate, 0.3, 0.01);
  for (const SyntheticIteration& it : run.iterations) {
    EXPECT_DOUBLE_EQ(it.mean_true, 0.3);
    EXPECT_EQ(it.max_true, 0.3);
  }
}

TEST(SyntheticRun, HistogramsCountEveryCandidate) {
  const SyntheticRun run =
      synthetic_smart_estimate(SyntheticPopulation::exponential(0.2), {0.01, 0.01}, 1'000'000, 11, Executor{8});
  EXPECT_EQ(run.population_mean, SyntheticPopulation::exponential(0.2).mean());
  ASSERT_EQ(run.iterations.size(), run.result.iterations.size());
  for (const SyntheticIteration& it : run.iterations) {
    ASSERT_EQ(it.true_histogram.size(), 50u);
    std::uint64_t a = 0, b = 0;
    for (auto c : it.true_histogram) a += c;
    for (auto c : it.estimate_histogram) b += c;
    EXPECT_EQ(a, it.candidates);
    EXPECT_EQ(b, it.candidates);
    EXPECT_LE(it.best_true, it.max_true);
    EXPECT_LE(it.mean_true, it.max_true);
  }
}

TEST(SyntheticRun, ReproducibleAcrossWorkers) {
  const SyntheticPopulation pop = SyntheticPopulation::exponential(0.2);
  const SyntheticRun a = synthetic_smart_estimate(pop, {0.01, 0.01}, 200000, 9, Executor{1});
  const SyntheticRun b = synthetic_smart_estimate(pop, {0.01, 0.01}, 200000, 9, Executor{7});
  EXPECT_EQ(a.result.outcome_digest, b.result.outcome_digest);
  EXPECT_EQ(a.result.best_sigma, b.result.best_sigma);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) EXPECT_EQ(a.iterations[i].true_histogram, b.iterations[i].true_histogram);
}
