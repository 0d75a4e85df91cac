#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smc/error.hpp"
#include "smc/lexer.hpp"
#include "smc/model.hpp"

namespace smc {

// ---------------------------------------------------------------------------
// Finite traces, stored flat: state i occupies values[i*width, (i+1)*width).

class Trace {
 public:
  Trace() = default;
  explicit Trace(std::size_t width) : width_(width) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return width_ ? values_.size() / width_ : count_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const Value> operator[](std::size_t i) const {
    return {values_.data() + i * width_, width_};
  }
  std::span<const Value> back() const { return (*this)[size() - 1]; }

  void push_back(std::span<const Value> state) {
    values_.insert(values_.end(), state.begin(), state.end());
    if (width_ == 0) ++count_;
  }
  void clear() noexcept {
    values_.clear();
    count_ = 0;
  }
  void truncate(std::size_t n) {
    if (n >= size()) return;
    values_.resize(n * width_);
    if (width_ == 0) count_ = n;
  }
  void reserve(std::size_t states) { values_.reserve(states * width_); }

  bool operator==(const Trace&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t count_ = 0;  // only meaningful for zero-width traces
  std::vector<Value> values_;
};

// ---------------------------------------------------------------------------
// Bounded temporal formulas.

enum class FormulaKind { constant, atom, negation, conjunction, disjunction, next, finally, globally, until };
enum class Comparison { eq, ne, lt, le, gt, ge };

struct Formula {
  FormulaKind kind = FormulaKind::constant;
  bool truth = true;  // constant

  // atom: variable `cmp` rhs
  std::string variable;
  std::ptrdiff_t variable_index = -1;  // -1 until bound against a model
  Comparison cmp = Comparison::eq;
  Value rhs = 0;
  std::string rhs_constant;  // named constant awaiting binding

  std::uint64_t bound = 0;  // finally / globally / until
  std::vector<Formula> children;

  bool operator==(const Formula&) const = default;

  static Formula constant(bool value) {
    Formula f;
    f.truth = value;
    return f;
  }
  static Formula atom(std::string var, Comparison cmp, Value rhs) {
    Formula f;
    f.kind = FormulaKind::atom;
    f.variable = std::move(var);
    f.cmp = cmp;
    f.rhs = rhs;
    return f;
  }
  static Formula unary(FormulaKind kind, Formula child, std::uint64_t bound = 0) {
    Formula f;
    f.kind = kind;
    f.bound = bound;
    f.children.push_back(std::move(child));
    return f;
  }
  static Formula binary(FormulaKind kind, Formula lhs, Formula rhs, std::uint64_t bound = 0) {
    Formula f;
    f.kind = kind;
    f.bound = bound;
    f.children.push_back(std::move(lhs));
    f.children.push_back(std::move(rhs));
    return f;
  }
};

inline const char* symbol(Comparison c) {
  switch (c) {
    case Comparison::eq: return "=";
    case Comparison::ne: return "!=";
    case Comparison::lt: return "<";
    case Comparison::le: return "<=";
    case Comparison::gt: return ">";
    case Comparison::ge: return ">=";
  }
  return "?";
}

inline std::string to_string(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::constant: return f.truth ? "true" : "false";
    case FormulaKind::atom:
      return f.variable + symbol(f.cmp) +
             (f.rhs_constant.empty() ? std::to_string(f.rhs) : f.rhs_constant);
    case FormulaKind::negation: return "!(" + to_string(f.children[0]) + ")";
    case FormulaKind::conjunction:
      return "(" + to_string(f.children[0]) + " & " + to_string(f.children[1]) + ")";
    case FormulaKind::disjunction:
      return "(" + to_string(f.children[0]) + " | " + to_string(f.children[1]) + ")";
    case FormulaKind::next: return "X(" + to_string(f.children[0]) + ")";
    case FormulaKind::finally:
      return "F<=" + std::to_string(f.bound) + "(" + to_string(f.children[0]) + ")";
    case FormulaKind::globally:
      return "G<=" + std::to_string(f.bound) + "(" + to_string(f.children[0]) + ")";
    case FormulaKind::until:
      return "(" + to_string(f.children[0]) + " U<=" + std::to_string(f.bound) + " " +
             to_string(f.children[1]) + ")";
  }
  return {};
}

namespace detail {

// or := and ('|' and)*;  and := until ('&' until)*;  until := unary ['U' '<=' INT until]
// unary := '!' unary | 'X' unary | ('F'|'G') '<=' INT unary | primary
class PropertyParser {
 public:
  explicit PropertyParser(TokenCursor& cur) : cur_(cur) {}

  Formula parse_or() {
    Formula f = parse_and();
    while (cur_.accept(TokenKind::bar)) {
      f = Formula::binary(FormulaKind::disjunction, std::move(f), parse_and());
    }
    return f;
  }

 private:
  Formula parse_and() {
    Formula f = parse_until();
    while (cur_.accept(TokenKind::amp)) {
      f = Formula::binary(FormulaKind::conjunction, std::move(f), parse_until());
    }
    return f;
  }

  Formula parse_until() {
    Formula lhs = parse_unary();
    if (cur_.at_keyword("U")) {
      cur_.next();
      const std::uint64_t k = parse_bound("U");
      Formula rhs = parse_until();
      return Formula::binary(FormulaKind::until, std::move(lhs), std::move(rhs), k);
    }
    return lhs;
  }

  std::uint64_t parse_bound(const char* op) {
    if (!cur_.at(TokenKind::le)) {
      cur_.fail(std::string("unbounded ") + op + " is not supported; write " + op + "<=k");
    }
    cur_.next();
    const Token& t = cur_.expect(TokenKind::integer, "integer step bound");
    try {
      return std::stoull(t.text);
    } catch (const std::exception&) {
      throw ParseError("step bound out of range", t.line, t.column);
    }
  }

  Formula parse_unary() {
    if (cur_.accept(TokenKind::bang)) {
      return Formula::unary(FormulaKind::negation, parse_unary());
    }
    if (cur_.at_keyword("X")) {
      cur_.next();
      return Formula::unary(FormulaKind::next, parse_unary());
    }
    if (cur_.at_keyword("F") || cur_.at_keyword("G")) {
      const bool fin = cur_.peek().text == "F";
      cur_.next();
      const std::uint64_t k = parse_bound(fin ? "F" : "G");
      return Formula::unary(fin ? FormulaKind::finally : FormulaKind::globally, parse_unary(), k);
    }
    return parse_primary();
  }

  Formula parse_primary() {
    if (cur_.accept(TokenKind::lparen)) {
      Formula f = parse_or();
      cur_.expect(TokenKind::rparen);
      return f;
    }
    if (cur_.at_keyword("true")) {
      cur_.next();
      return Formula::constant(true);
    }
    if (cur_.at_keyword("false")) {
      cur_.next();
      return Formula::constant(false);
    }
    if (cur_.at_keyword("U")) cur_.fail("'U' needs a left operand");
    const Token& name = cur_.expect(TokenKind::identifier, "formula");
    Comparison cmp;
    switch (cur_.peek().kind) {
      case TokenKind::eq: cmp = Comparison::eq; break;
      case TokenKind::ne: cmp = Comparison::ne; break;
      case TokenKind::lt: cmp = Comparison::lt; break;
      case TokenKind::le: cmp = Comparison::le; break;
      case TokenKind::gt: cmp = Comparison::gt; break;
      case TokenKind::ge: cmp = Comparison::ge; break;
      default: cur_.fail("expected comparison after '" + name.text + "', found " + cur_.found());
    }
    cur_.next();
    Formula f = Formula::atom(name.text, cmp, 0);
    const bool negative = cur_.accept(TokenKind::minus);
    if (cur_.at(TokenKind::integer)) {
      const Token& t = cur_.next();
      try {
        f.rhs = std::stoll(t.text);
      } catch (const std::exception&) {
        throw ParseError("integer out of range", t.line, t.column);
      }
      if (negative) f.rhs = -f.rhs;
    } else if (!negative && cur_.at(TokenKind::identifier)) {
      f.rhs_constant = cur_.next().text;
    } else {
      cur_.fail("expected integer or constant, found " + cur_.found());
    }
    return f;
  }

  TokenCursor& cur_;
};

}  // namespace detail

/// Parses a property such as "F<=100 col=2" or "X((s=1) & X G<=4 !(s=1))".
inline Formula parse_property(std::string_view text) {
  TokenCursor cur(tokenize(text));
  detail::PropertyParser parser(cur);
  Formula f = parser.parse_or();
  if (!cur.at(TokenKind::end)) cur.fail("unexpected " + cur.found() + " after formula");
  return f;
}

/// Resolves variable indices and named constants against `mdp`.
inline Formula bind(Formula f, const Mdp& mdp) {
  if (f.kind == FormulaKind::atom) {
    f.variable_index = mdp.variable_index(f.variable);
    if (f.variable_index < 0) throw SemanticError("unknown variable '" + f.variable + "' in property");
    if (!f.rhs_constant.empty()) {
      const auto it = mdp.constants.find(f.rhs_constant);
      if (it == mdp.constants.end()) {
        throw SemanticError("unknown constant '" + f.rhs_constant + "' in property");
      }
      f.rhs = it->second;
      f.rhs_constant.clear();
    }
  }
  for (Formula& c : f.children) c = bind(std::move(c), mdp);
  return f;
}

inline bool is_bound(const Formula& f) {
  if (f.kind == FormulaKind::atom && (f.variable_index < 0 || !f.rhs_constant.empty())) return false;
  return std::all_of(f.children.begin(), f.children.end(), [](const Formula& c) { return is_bound(c); });
}

/// Minimal L such that the verdict at position 0 depends only on states 0..L.
inline std::uint64_t horizon(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::constant:
    case FormulaKind::atom: return 0;
    case FormulaKind::negation: return horizon(f.children[0]);
    case FormulaKind::conjunction:
    case FormulaKind::disjunction: return std::max(horizon(f.children[0]), horizon(f.children[1]));
    case FormulaKind::next: return 1 + horizon(f.children[0]);
    case FormulaKind::finally:
    case FormulaKind::globally: return f.bound + horizon(f.children[0]);
    case FormulaKind::until:
      return f.bound + std::max(horizon(f.children[0]), horizon(f.children[1]));
  }
  return 0;
}

namespace detail {

inline bool compare(Value lhs, Comparison cmp, Value rhs) {
  switch (cmp) {
    case Comparison::eq: return lhs == rhs;
    case Comparison::ne: return lhs != rhs;
    case Comparison::lt: return lhs < rhs;
    case Comparison::le: return lhs <= rhs;
    case Comparison::gt: return lhs > rhs;
    case Comparison::ge: return lhs >= rhs;
  }
  return false;
}

inline bool eval_unchecked(const Formula& f, const Trace& w, std::size_t pos) {
  switch (f.kind) {
    case FormulaKind::constant: return f.truth;
    case FormulaKind::atom:
      return compare(w[pos][static_cast<std::size_t>(f.variable_index)], f.cmp, f.rhs);
    case FormulaKind::negation: return !eval_unchecked(f.children[0], w, pos);
    case FormulaKind::conjunction:
      return eval_unchecked(f.children[0], w, pos) && eval_unchecked(f.children[1], w, pos);
    case FormulaKind::disjunction:
      return eval_unchecked(f.children[0], w, pos) || eval_unchecked(f.children[1], w, pos);
    case FormulaKind::next: return eval_unchecked(f.children[0], w, pos + 1);
    case FormulaKind::finally:
      for (std::uint64_t i = 0; i <= f.bound; ++i) {
        if (eval_unchecked(f.children[0], w, pos + i)) return true;
      }
      return false;
    case FormulaKind::globally:
      for (std::uint64_t i = 0; i <= f.bound; ++i) {
        if (!eval_unchecked(f.children[0], w, pos + i)) return false;
      }
      return true;
    case FormulaKind::until:
      for (std::uint64_t i = 0; i <= f.bound; ++i) {
        if (eval_unchecked(f.children[1], w, pos + i)) return true;
        if (!eval_unchecked(f.children[0], w, pos + i)) return false;
      }
      return false;
  }
  return false;
}

}  // namespace detail

/// Bounded-semantics verdict of a bound formula at `pos`. Never reads past
/// pos + horizon(f); a shorter trace is a TraceError.
inline bool evaluate(const Formula& f, const Trace& w, std::size_t pos = 0) {
  const std::uint64_t need = pos + horizon(f) + 1;
  if (w.size() < need) {
    throw TraceError("trace has " + std::to_string(w.size()) + " states, formula needs " +
                     std::to_string(need));
  }
  if (!is_bound(f)) throw SemanticError("formula is not bound to a model");
  return detail::eval_unchecked(f, w, pos);
}

}  // namespace smc
