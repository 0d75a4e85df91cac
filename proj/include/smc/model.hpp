#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "smc/error.hpp"

namespace smc {

using Value = std::int64_t;
using State = std::vector<Value>;
using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Integer/boolean expressions over model variables. Booleans evaluate to 0/1.

enum class ExprOp {
  literal,
  variable,
  neg,
  logical_not,
  add,
  sub,
  mul,
  div,
  mod,
  eq,
  ne,
  lt,
  le,
  gt,
  ge,
  logical_and,
  logical_or,
  ite,
};

struct Expr {
  ExprOp op = ExprOp::literal;
  Value value = 0;   // literal value, or variable index
  std::string name;  // variable name, kept for printing
  std::vector<Expr> args;

  static Expr literal(Value v) { return Expr{ExprOp::literal, v, {}, {}}; }
  static Expr variable(std::size_t index, std::string name) {
    return Expr{ExprOp::variable, static_cast<Value>(index), std::move(name), {}};
  }
  static Expr unary(ExprOp op, Expr a) { return Expr{op, 0, {}, {std::move(a)}}; }
  static Expr binary(ExprOp op, Expr a, Expr b) {
    return Expr{op, 0, {}, {std::move(a), std::move(b)}};
  }

  bool is_boolean() const {
    switch (op) {
      case ExprOp::logical_not:
      case ExprOp::eq:
      case ExprOp::ne:
      case ExprOp::lt:
      case ExprOp::le:
      case ExprOp::gt:
      case ExprOp::ge:
      case ExprOp::logical_and:
      case ExprOp::logical_or:
        return true;
      case ExprOp::ite:
        return args[1].is_boolean();
      default:
        return false;
    }
  }

  Value eval(std::span<const Value> s) const {
    switch (op) {
      case ExprOp::literal: return value;
      case ExprOp::variable: return s[static_cast<std::size_t>(value)];
      case ExprOp::neg: return -args[0].eval(s);
      case ExprOp::logical_not: return args[0].eval(s) == 0 ? 1 : 0;
      case ExprOp::add: return args[0].eval(s) + args[1].eval(s);
      case ExprOp::sub: return args[0].eval(s) - args[1].eval(s);
      case ExprOp::mul: return args[0].eval(s) * args[1].eval(s);
      case ExprOp::div:
      case ExprOp::mod: {
        const Value d = args[1].eval(s);
        if (d == 0) throw RangeError("division by zero");
        const Value n = args[0].eval(s);
        return op == ExprOp::div ? n / d : n % d;
      }
      case ExprOp::eq: return args[0].eval(s) == args[1].eval(s);
      case ExprOp::ne: return args[0].eval(s) != args[1].eval(s);
      case ExprOp::lt: return args[0].eval(s) < args[1].eval(s);
      case ExprOp::le: return args[0].eval(s) <= args[1].eval(s);
      case ExprOp::gt: return args[0].eval(s) > args[1].eval(s);
      case ExprOp::ge: return args[0].eval(s) >= args[1].eval(s);
      case ExprOp::logical_and: return args[0].eval(s) != 0 && args[1].eval(s) != 0;
      case ExprOp::logical_or: return args[0].eval(s) != 0 || args[1].eval(s) != 0;
      case ExprOp::ite: return args[0].eval(s) != 0 ? args[1].eval(s) : args[2].eval(s);
    }
    return 0;
  }

  bool operator==(const Expr&) const = default;
};

inline std::string to_string(const Expr& e) {
  auto bin = [&](const char* sym) {
    return "(" + to_string(e.args[0]) + " " + sym + " " + to_string(e.args[1]) + ")";
  };
  switch (e.op) {
    case ExprOp::literal: return e.value < 0 ? "(" + std::to_string(e.value) + ")"
                                             : std::to_string(e.value);
    case ExprOp::variable: return e.name;
    case ExprOp::neg: return "(-" + to_string(e.args[0]) + ")";
    case ExprOp::logical_not: return "(!" + to_string(e.args[0]) + ")";
    case ExprOp::add: return bin("+");
    case ExprOp::sub: return bin("-");
    case ExprOp::mul: return bin("*");
    case ExprOp::div: return bin("/");
    case ExprOp::mod: return bin("%");
    case ExprOp::eq: return bin("=");
    case ExprOp::ne: return bin("!=");
    case ExprOp::lt: return bin("<");
    case ExprOp::le: return bin("<=");
    case ExprOp::gt: return bin(">");
    case ExprOp::ge: return bin(">=");
    case ExprOp::logical_and: return bin("&");
    case ExprOp::logical_or: return bin("|");
    case ExprOp::ite:
      return "(" + to_string(e.args[0]) + " ? " + to_string(e.args[1]) + " : " +
             to_string(e.args[2]) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------

struct VariableDecl {
  std::string name;
  Value lower = 0;
  Value upper = 0;
  Value init = 0;
  unsigned bit_width = 1;  // bits this variable occupies in the trace vector

  bool operator==(const VariableDecl&) const = default;
};

struct Update {
  std::size_t variable = 0;
  Expr value;

  bool operator==(const Update&) const = default;
};

struct Branch {
  Rational weight;  // exact, normalized so the command's weights sum to 1
  std::vector<Update> updates;

  bool operator==(const Branch&) const = default;
};

struct Command {
  std::string label;  // empty when unlabelled
  Expr guard;
  std::vector<Branch> branches;
  // Cumulative branch probabilities; cumulative.back() == 1.
  std::vector<double> cumulative;

  bool operator==(const Command&) const = default;
};

struct NamedProperty {
  std::string name;
  std::string text;

  bool operator==(const NamedProperty&) const = default;
};

struct Mdp {
  std::vector<VariableDecl> variables;
  std::vector<Command> commands;
  std::map<std::string, Value> constants;
  std::vector<NamedProperty> properties;

  std::size_t width() const { return variables.size(); }

  std::ptrdiff_t variable_index(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (variables[i].name == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  }

  bool operator==(const Mdp&) const = default;
};

/// Smallest width (at least 1) that holds upper - lower + 1 distinct values.
inline unsigned minimal_bit_width(Value lower, Value upper) {
  const auto span = static_cast<std::uint64_t>(upper) - static_cast<std::uint64_t>(lower);
  return std::max(1u, static_cast<unsigned>(std::bit_width(span)));
}

/// Checks weights, renormalizes them exactly and fills in the cumulative table.
/// Weights must each lie in (0,1] and sum to 1 within 1e-9.
inline void finalize_command(Command& cmd) {
  if (cmd.branches.empty()) throw SemanticError("command has no branches");
  Rational sum = 0;
  for (const Branch& b : cmd.branches) {
    if (b.weight <= 0 || b.weight > 1) {
      throw SemanticError("branch weight " + b.weight.str() + " outside (0,1]");
    }
    sum += b.weight;
  }
  const Rational tolerance(1, 1000000000);
  if (abs(sum - 1) > tolerance) {
    throw SemanticError("branch weights sum to " + std::to_string(sum.convert_to<double>()) +
                        ", not 1");
  }
  if (sum != 1) {
    for (Branch& b : cmd.branches) b.weight /= sum;
  }
  cmd.cumulative.clear();
  Rational acc = 0;
  for (const Branch& b : cmd.branches) {
    acc += b.weight;
    cmd.cumulative.push_back(acc.convert_to<double>());
  }
  cmd.cumulative.back() = 1.0;
}

inline State initial_state(const Mdp& mdp) {
  State s;
  s.reserve(mdp.width());
  for (const VariableDecl& v : mdp.variables) s.push_back(v.init);
  return s;
}

inline bool valid_state(const Mdp& mdp, std::span<const Value> state) {
  if (state.size() != mdp.width()) return false;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i] < mdp.variables[i].lower || state[i] > mdp.variables[i].upper) return false;
  }
  return true;
}

/// Indices of commands whose guard holds, in declaration order.
inline void enabled_into(const Mdp& mdp, std::span<const Value> state,
                         std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t i = 0; i < mdp.commands.size(); ++i) {
    if (mdp.commands[i].guard.eval(state) != 0) out.push_back(i);
  }
}

inline std::vector<std::size_t> enabled(const Mdp& mdp, std::span<const Value> state) {
  std::vector<std::size_t> out;
  enabled_into(mdp, state, out);
  return out;
}

/// Branch whose cumulative interval contains u in [0,1).
inline std::size_t select_branch(const Command& cmd, double u) {
  const auto it = std::upper_bound(cmd.cumulative.begin(), cmd.cumulative.end(), u);
  if (it == cmd.cumulative.end()) return cmd.cumulative.size() - 1;
  return static_cast<std::size_t>(it - cmd.cumulative.begin());
}

/// Writes the successor reached through `branch` into `out`. All right-hand
/// sides read the pre-state, so updates are simultaneous.
inline void apply_branch(const Mdp& mdp, std::span<const Value> state, const Branch& branch,
                         std::span<Value> out) {
  std::copy(state.begin(), state.end(), out.begin());
  for (const Update& u : branch.updates) {
    const Value v = u.value.eval(state);
    const VariableDecl& decl = mdp.variables[u.variable];
    if (v < decl.lower || v > decl.upper) {
      throw RangeError("update " + decl.name + "'=" + std::to_string(v) + " leaves [" +
                       std::to_string(decl.lower) + ".." + std::to_string(decl.upper) + "]");
    }
    out[u.variable] = v;
  }
}

inline State successor(const Mdp& mdp, std::span<const Value> state, std::size_t cmd,
                       double u) {
  const Command& c = mdp.commands.at(cmd);
  State next(state.size());
  apply_branch(mdp, state, c.branches[select_branch(c, u)], next);
  return next;
}

struct EncodedValue {
  std::uint64_t value;
  unsigned bits;

  bool operator==(const EncodedValue&) const = default;
};

/// Per-variable (value - lower, bit_width) in declaration order.
inline std::vector<EncodedValue> encode_state(const Mdp& mdp, std::span<const Value> state) {
  std::vector<EncodedValue> out;
  out.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const VariableDecl& v = mdp.variables[i];
    out.push_back({static_cast<std::uint64_t>(state[i]) - static_cast<std::uint64_t>(v.lower),
                   v.bit_width});
  }
  return out;
}

inline std::string format_state(const Mdp& mdp, std::span<const Value> state) {
  std::string out = "(";
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (i) out += ",";
    out += mdp.variables[i].name + "=" + std::to_string(state[i]);
  }
  return out + ")";
}

/// Renders the model back into the concrete syntax accepted by parse_model.
inline std::string print(const Mdp& mdp) {
  std::ostringstream os;
  for (const auto& [name, value] : mdp.constants) {
    os << "const " << name << " = " << value << ";\n";
  }
  for (const VariableDecl& v : mdp.variables) {
    os << "var " << v.name << " : [" << v.lower << ".." << v.upper << "] init " << v.init;
    if (v.bit_width != minimal_bit_width(v.lower, v.upper)) os << " bits " << v.bit_width;
    os << ";\n";
  }
  for (const Command& c : mdp.commands) {
    os << "[" << c.label << "] " << to_string(c.guard) << " ->";
    for (std::size_t b = 0; b < c.branches.size(); ++b) {
      const Branch& br = c.branches[b];
      os << (b ? " + " : " ") << numerator(br.weight) << "/" << denominator(br.weight) << ":";
      if (br.updates.empty()) {
        os << "true";
      }
      for (std::size_t k = 0; k < br.updates.size(); ++k) {
        const Update& u = br.updates[k];
        os << (k ? "&" : "") << "(" << mdp.variables[u.variable].name << "'=" << to_string(u.value)
           << ")";
      }
    }
    os << ";\n";
  }
  for (const NamedProperty& p : mdp.properties) {
    os << "property \"" << p.name << "\" = " << p.text << ";\n";
  }
  return os.str();
}

}  // namespace smc
