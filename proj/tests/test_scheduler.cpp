#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <random>

#include "support.hpp"

using namespace smc;
using boost::multiprecision::cpp_int;

namespace {

const Mdp& wide_model() {
  static const Mdp m = parse_model(R"(
    var a:[0..1] init 0; var b:[-3..3] init 0; var c:[0..1000] init 0; var d:[5..5] init 5 bits 9;
    [t] true -> true;
  )");
  return m;
}

State random_state(const Mdp& m, std::mt19937_64& rng) {
  State s;
  for (const VariableDecl& v : m.variables) {
    s.push_back(std::uniform_int_distribution<Value>(v.lower, v.upper)(rng));
  }
  return s;
}

}  // namespace

TEST(Modulus, PrimeAndAwayFromPowersOfTwo) {
  EXPECT_TRUE(is_prime(hash_modulus));
  EXPECT_LE(hash_modulus, std::uint64_t{1} << 62);
  EXPECT_FALSE(near_power_of_two(hash_modulus));
  EXPECT_TRUE(near_power_of_two((std::uint64_t{1} << 61) - 1));
  EXPECT_TRUE(is_prime(97));
  EXPECT_FALSE(is_prime(91));
  EXPECT_TRUE(is_prime((std::uint64_t{1} << 61) - 1));
  // largest prime not above 1.5 * 2^61
  for (std::uint64_t n = hash_modulus + 1; n <= 3 * (std::uint64_t{1} << 60); ++n) EXPECT_FALSE(is_prime(n));
}

TEST(HashInit, Examples) {
  EXPECT_EQ(hash_init(SchedulerId{0}).h, 0u);
  EXPECT_EQ(hash_init(SchedulerId{hash_modulus}).h, 0u);
  EXPECT_EQ(hash_init(SchedulerId{hash_modulus - 1}).h, hash_modulus - 1);
}

TEST(ShiftMod, Examples) {
  EXPECT_EQ(shift_mod(1, 0), 1u);
  EXPECT_EQ(shift_mod(5, 4, 97), 80u);
}

TEST(ShiftMod, MatchesBigIntegerOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t m = 2 + rng() % ((std::uint64_t{1} << 62) - 1);
    const std::uint64_t h = rng() % m;
    const unsigned j = static_cast<unsigned>(rng() % 130);
    const cpp_int expected = (cpp_int(h) << j) % m;
    EXPECT_EQ(cpp_int(shift_mod(h, j, m)), expected) << h << " " << j << " " << m;
  }
}

TEST(HashUpdate, Examples) {
  EXPECT_EQ(hash_update(HashState{5, 97}, 3, 4).h, 83u);
  EXPECT_EQ(hash_update(HashState{42, 97}, 0, 0).h, 42u);
}

TEST(HashUpdate, ChainsMatchBigIntegerConcatenation) {
  const Mdp& m = wide_model();
  std::mt19937_64 rng(3);
  for (int chain = 0; chain < 1000; ++chain) {
    const SchedulerId sigma{rng()};
    HashState hs = hash_init(sigma);
    cpp_int concat = sigma.value;
    const int length = 1 + static_cast<int>(rng() % 40);
    for (int k = 0; k < length; ++k) {
      const State s = random_state(m, rng);
      hs = hash_state(hs, m, s);
      for (const EncodedValue& e : encode_state(m, s)) concat = (concat << e.bits) + e.value;
      ASSERT_EQ(cpp_int(hs.h), concat % hash_modulus);
    }
  }
}

TEST(Prng, ReferenceValue) {
  const PrngDraw d = prng_next(PrngState{0});
  EXPECT_EQ(d.value, 0xE220A8397B1DCDAFull);
  EXPECT_EQ(d.next.s, 0x9E3779B97F4A7C15ull);
  EXPECT_EQ(prng_next(d.next).value, 0x6E789E6AA1B965F4ull);
}

TEST(Prng, DeterministicAndUniformMean) {
  SplitMix64 a(12345), b(12345);
  long double sum = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const auto x = a();
    ASSERT_EQ(x, b());
    sum += static_cast<long double>(x) / 18446744073709551616.0L;
  }
  const long double mean = sum / 1e6L;
  EXPECT_GE(mean, 0.499L);
  EXPECT_LE(mean, 0.501L);
}

TEST(ChooseUniform, Singleton) {
  const IndexDraw d = choose_uniform(PrngState{77}, 1);
  EXPECT_EQ(d.index, 0u);
  EXPECT_EQ(d.next, prng_next(PrngState{77}).next);
}

TEST(ChooseUniform, ParityForTwo) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const PrngDraw r = prng_next(PrngState{s});
    EXPECT_EQ(choose_uniform(PrngState{s}, 2).index, r.value % 2);
  }
}

TEST(ChooseUniform, ThreeWayFrequencies) {
  PrngState p{2026};
  std::array<std::uint64_t, 3> counts{};
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const IndexDraw d = choose_uniform(p, 3);
    p = d.next;
    ++counts[d.index];
  }
  const double sd = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
  double chi2 = 0;
  for (auto c : counts) {
    EXPECT_NEAR(static_cast<double>(c), n / 3.0, 3 * sd);
    chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  }
  EXPECT_LT(chi2, 13.8);  // 0.999 quantile, 2 degrees of freedom
}

TEST(ChooseUniform, RejectsTopOfRange) {
  // n = 2^63 + 1: 2^64 mod n = 2^63 - 1, so about half the draws are rejected.
  const std::uint64_t n = (std::uint64_t{1} << 63) + 1;
  PrngState p{5};
  for (int i = 0; i < 1000; ++i) {
    const IndexDraw d = choose_uniform(p, n);
    EXPECT_LT(d.index, n);
    p = d.next;
  }
}

TEST(Simulate, TraceLengthIsHorizonPlusOne) {
  const Simulation s = simulate(test::fig3(), test::fig3_property(), SchedulerId{9}, 1, SchedulerClass::history);
  EXPECT_EQ(s.trace.size(), 7u);
  EXPECT_EQ(s.actions.size(), 6u);
  EXPECT_EQ(s.verdict.trace_length, 7u);
  EXPECT_FALSE(s.verdict.deadlocked);
  EXPECT_EQ(s.verdict.satisfied, evaluate(test::fig3_property(), s.trace));
}

TEST(Simulate, Deterministic) {
  for (auto cls : {SchedulerClass::history, SchedulerClass::memoryless}) {
    for (std::uint64_t sigma = 0; sigma < 50; ++sigma) {
      const Simulation a = simulate(test::choice(), test::choice_property(), SchedulerId{sigma}, sigma * 7, cls);
      const Simulation b = simulate(test::choice(), test::choice_property(), SchedulerId{sigma}, sigma * 7, cls);
      EXPECT_EQ(a.trace, b.trace);
      EXPECT_EQ(a.actions, b.actions);
      EXPECT_EQ(a.verdict, b.verdict);
    }
  }
}

TEST(Simulate, MemorylessChoiceDependsOnStateOnly) {
  const Mdp& m = test::fig3();
  for (std::uint64_t sigma = 0; sigma < 200; ++sigma) {
    std::optional<std::ptrdiff_t> at_zero;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Simulation s = simulate(m, test::fig3_property(), SchedulerId{sigma}, seed, SchedulerClass::memoryless);
      for (std::size_t k = 0; k < s.actions.size(); ++k) {
        if (s.trace[k][0] != 0) continue;
        if (!at_zero) at_zero = s.actions[k];
        EXPECT_EQ(*at_zero, s.actions[k]);
      }
    }
  }
}

TEST(Simulate, HistoryChoiceIsFunctionOfPrefix) {
  const Mdp& m = test::choice();
  const Formula& f = test::choice_property();
  for (std::uint64_t sigma = 0; sigma < 100; ++sigma) {
    std::map<std::vector<Value>, std::ptrdiff_t> seen;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Simulation s = simulate(m, f, SchedulerId{sigma}, seed, SchedulerClass::history);
      std::vector<Value> prefix;
      for (std::size_t k = 0; k < s.actions.size(); ++k) {
        prefix.insert(prefix.end(), s.trace[k].begin(), s.trace[k].end());
        const auto [it, fresh] = seen.emplace(prefix, s.actions[k]);
        if (!fresh) {
          EXPECT_EQ(it->second, s.actions[k]);
        }
      }
    }
  }
}

TEST(Simulate, DeadlockIsAbsorbing) {
  const Mdp m = parse_model("var x:[0..3] init 0; [inc] x<2 -> (x'=x+1);");
  const Formula f = bind(parse_property("G<=5 x<=2"), m);
  const Simulation s = simulate(m, f, SchedulerId{1}, 1, SchedulerClass::history);
  EXPECT_TRUE(s.verdict.deadlocked);
  EXPECT_TRUE(s.verdict.satisfied);
  for (std::size_t k = 2; k < s.trace.size(); ++k) EXPECT_EQ(s.trace[k][0], 2);
  EXPECT_EQ(s.actions.back(), -1);
}

TEST(Simulate, RangeErrorPropagates) {
  const Mdp m = parse_model("var x:[0..1] init 0; [inc] true -> (x'=x+1);");
  const Formula f = bind(parse_property("F<=3 x=5"), m);
  EXPECT_THROW(simulate(m, f, SchedulerId{1}, 1, SchedulerClass::history), RangeError);
}

TEST(Simulate, FrequencyMatchesExactSchedulerProbability) {
  const Mdp& m = test::fig3();
  const Formula& f = test::fig3_property();
  Simulator sim(m, f);
  for (std::uint64_t sigma : {1ull, 2ull, 0xDEADBEEFull, 123456789ull}) {
    const OracleResult exact = exact_scheduler_probability(m, f, SchedulerId{sigma}, SchedulerClass::history);
    std::uint64_t wins = 0;
    for (std::uint64_t seed = 0; seed < 100000; ++seed) {
      wins += sim.run(SchedulerId{sigma}, mix_seed({sigma, seed}), SchedulerClass::history).satisfied ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(wins) / 1e5, static_cast<double>(exact.value), 0.01) << sigma;
  }
}
