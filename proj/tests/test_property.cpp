#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "support.hpp"

using namespace smc;

namespace {

Trace trace_of(std::initializer_list<Value> values) {
  Trace t(1);
  for (Value v : values) t.push_back(std::vector<Value>{v});
  return t;
}

// Straight transcription of the bounded semantics, used as a reference.
bool naive(const Formula& f, const std::vector<std::vector<Value>>& w, std::size_t pos) {
  switch (f.kind) {
    case FormulaKind::constant: return f.truth;
    case FormulaKind::atom: {
      const Value v = w.at(pos).at(static_cast<std::size_t>(f.variable_index));
      switch (f.cmp) {
        case Comparison::eq: return v == f.rhs;
        case Comparison::ne: return v != f.rhs;
        case Comparison::lt: return v < f.rhs;
        case Comparison::le: return v <= f.rhs;
        case Comparison::gt: return v > f.rhs;
        case Comparison::ge: return v >= f.rhs;
      }
      return false;
    }
    case FormulaKind::negation: return !naive(f.children[0], w, pos);
    case FormulaKind::conjunction: return naive(f.children[0], w, pos) && naive(f.children[1], w, pos);
    case FormulaKind::disjunction: return naive(f.children[0], w, pos) || naive(f.children[1], w, pos);
    case FormulaKind::next: return naive(f.children[0], w, pos + 1);
    case FormulaKind::finally:
      for (std::uint64_t i = 0; i <= f.bound; ++i) {
        if (naive(f.children[0], w, pos + i)) return true;
      }
      return false;
    case FormulaKind::globally:
      for (std::uint64_t i = 0; i <= f.bound; ++i) {
        if (!naive(f.children[0], w, pos + i)) return false;
      }
      return true;
    case FormulaKind::until:
      for (std::uint64_t i = 0; i <= f.bound; ++i) {
        bool prefix = true;
        for (std::uint64_t j = 0; j < i && prefix; ++j) prefix = naive(f.children[0], w, pos + j);
        if (prefix && naive(f.children[1], w, pos + i)) return true;
      }
      return false;
  }
  return false;
}

const Mdp& two_vars() {
  static const Mdp m = parse_model("var a:[0..3] init 0; var b:[0..1] init 0; [t] true -> true;");
  return m;
}

Formula random_formula(std::mt19937_64& rng, int depth, std::uint64_t budget) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  const int k = pick(rng);
  auto bound = [&](std::uint64_t cap) { return std::uniform_int_distribution<std::uint64_t>(0, cap)(rng); };
  if (k <= 1 || (budget == 0 && k >= 5)) {
    const bool var_a = rng() & 1;
    const auto cmp = static_cast<Comparison>(rng() % 6);
    return Formula::atom(var_a ? "a" : "b", cmp, static_cast<Value>(rng() % (var_a ? 4 : 2)));
  }
  switch (k) {
    case 2: return Formula::unary(FormulaKind::negation, random_formula(rng, depth - 1, budget));
    case 3: return Formula::binary(FormulaKind::conjunction, random_formula(rng, depth - 1, budget), random_formula(rng, depth - 1, budget));
    case 4: return Formula::binary(FormulaKind::disjunction, random_formula(rng, depth - 1, budget), random_formula(rng, depth - 1, budget));
    case 5: return Formula::unary(FormulaKind::next, random_formula(rng, depth - 1, budget - 1));
    default: {
      const std::uint64_t b = bound(std::min<std::uint64_t>(budget, 4));
      const std::uint64_t rest = budget - b;
      if (k == 6) return Formula::unary(FormulaKind::finally, random_formula(rng, depth - 1, rest), b);
      if (k == 7) return Formula::unary(FormulaKind::globally, random_formula(rng, depth - 1, rest), b);
      return Formula::binary(FormulaKind::until, random_formula(rng, depth - 1, rest), random_formula(rng, depth - 1, rest), b);
    }
  }
}

}  // namespace

TEST(ParseProperty, FinallyAtom) {
  const Formula f = parse_property("F<=100 col=2");
  EXPECT_EQ(f.kind, FormulaKind::finally);
  EXPECT_EQ(f.bound, 100u);
  ASSERT_EQ(f.children.size(), 1u);
  EXPECT_EQ(f.children[0], Formula::atom("col", Comparison::eq, 2));
  EXPECT_EQ(horizon(f), 100u);
}

TEST(ParseProperty, Fig3Tree) {
  const Formula f = parse_property("X((s=1) & X G<=4 !(s=1))");
  const Formula psi = Formula::atom("s", Comparison::eq, 1);
  const Formula expected = Formula::unary(
      FormulaKind::next,
      Formula::binary(FormulaKind::conjunction, psi,
                      Formula::unary(FormulaKind::next,
                                     Formula::unary(FormulaKind::globally, Formula::unary(FormulaKind::negation, psi), 4))));
  EXPECT_EQ(f, expected);
  EXPECT_EQ(horizon(f), 6u);
}

TEST(ParseProperty, Errors) {
  EXPECT_THROW(parse_property("F<= x"), ParseError);
  EXPECT_THROW(parse_property("F s=1"), ParseError);
  EXPECT_THROW(parse_property("s=1 &"), ParseError);
  EXPECT_THROW(parse_property("(s=1"), ParseError);
  EXPECT_THROW(parse_property("s=1 s=2"), ParseError);
}

TEST(ParseProperty, PrecedenceAndAssociativity) {
  EXPECT_EQ(parse_property("a=1 | b=1 & a=2"), parse_property("a=1 | (b=1 & a=2)"));
  EXPECT_EQ(parse_property("a=1 U<=2 b=1 U<=3 a=0"), parse_property("a=1 U<=2 (b=1 U<=3 a=0)"));
  EXPECT_EQ(parse_property("!a=1 & b=0"), parse_property("(!(a=1)) & b=0"));
  EXPECT_EQ(horizon(parse_property("a=1 U<=2 (b=1 U<=3 X a=0)")), 6u);
}

TEST(ParseProperty, RoundTripThroughToString) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Formula f = random_formula(rng, 4, 10);
    EXPECT_EQ(parse_property(to_string(f)), f) << to_string(f);
  }
}

TEST(Bind, UnknownVariableAndConstants) {
  const Mdp m = parse_model("const K = 1; var s:[0..1] init 0; [a] true -> true;");
  EXPECT_THROW(bind(parse_property("t=1"), m), SemanticError);
  const Formula f = bind(parse_property("s=K"), m);
  EXPECT_TRUE(is_bound(f));
  EXPECT_EQ(f.rhs, 1);
  EXPECT_FALSE(is_bound(parse_property("s=1")));
}

TEST(Evaluate, Fig3Traces) {
  const Formula& f = test::fig3_property();
  EXPECT_TRUE(evaluate(f, trace_of({0, 1, 0, 0, 0, 0, 0})));
  EXPECT_FALSE(evaluate(f, trace_of({0, 0, 0, 0, 0, 0, 0})));
  EXPECT_FALSE(evaluate(f, trace_of({0, 1, 0, 0, 0, 0, 1})));
}

TEST(Evaluate, ShortTraceIsAnError) {
  EXPECT_THROW(evaluate(test::fig3_property(), trace_of({0, 1, 0, 0, 0, 0})), TraceError);
  const Formula atom = bind(parse_property("s=0"), test::fig3());
  EXPECT_THROW(evaluate(atom, trace_of({0, 0}), 2), TraceError);
}

TEST(Evaluate, ZeroBoundGloballyIsIdentity) {
  const Mdp& m = test::fig3();
  const Formula g = bind(parse_property("G<=0 s=1"), m);
  const Formula a = bind(parse_property("s=1"), m);
  for (Value v : {0, 1}) EXPECT_EQ(evaluate(g, trace_of({v})), evaluate(a, trace_of({v})));
}

TEST(Evaluate, MatchesNaiveReferenceOnRandomInputs) {
  std::mt19937_64 rng(2024);
  const Mdp& m = two_vars();
  for (int i = 0; i < 3000; ++i) {
    const Formula f = bind(random_formula(rng, 4, 10), m);
    const std::uint64_t h = horizon(f);
    ASSERT_LE(h, 10u);
    const std::size_t pos = rng() % 3;
    std::vector<std::vector<Value>> raw;
    Trace t(2);
    for (std::size_t k = 0; k < pos + h + 1; ++k) {
      raw.push_back({static_cast<Value>(rng() % 4), static_cast<Value>(rng() % 2)});
      t.push_back(raw.back());
    }
    EXPECT_EQ(evaluate(f, t, pos), naive(f, raw, pos)) << to_string(f);

    // extra states beyond the horizon never change the verdict
    Trace longer = t;
    for (int k = 0; k < 5; ++k) longer.push_back(std::vector<Value>{static_cast<Value>(rng() % 4), static_cast<Value>(rng() % 2)});
    EXPECT_EQ(evaluate(f, longer, pos), evaluate(f, t, pos)) << to_string(f);
  }
}

TEST(Evaluate, DeMorganDuality) {
  std::mt19937_64 rng(99);
  const Mdp& m = two_vars();
  for (int i = 0; i < 1000; ++i) {
    const Formula phi = bind(random_formula(rng, 3, 5), m);
    const std::uint64_t k = rng() % 5;
    const Formula lhs = Formula::unary(FormulaKind::negation, Formula::unary(FormulaKind::finally, phi, k));
    const Formula rhs = Formula::unary(FormulaKind::globally, Formula::unary(FormulaKind::negation, phi), k);
    ASSERT_EQ(horizon(lhs), horizon(rhs));
    Trace t(2);
    for (std::uint64_t s = 0; s <= horizon(lhs); ++s) {
      t.push_back(std::vector<Value>{static_cast<Value>(rng() % 4), static_cast<Value>(rng() % 2)});
    }
    EXPECT_EQ(evaluate(lhs, t), evaluate(rhs, t));
  }
}

TEST(Horizon, Recursion) {
  EXPECT_EQ(horizon(parse_property("s=1")), 0u);
  EXPECT_EQ(horizon(parse_property("X X s=1")), 2u);
  EXPECT_EQ(horizon(parse_property("G<=3 X s=1 | F<=7 s=0")), 7u);
  EXPECT_EQ(horizon(parse_property("(X s=1) U<=2 (X X s=0)")), 4u);
  EXPECT_EQ(horizon(parse_property("true")), 0u);
}
