#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "smc/error.hpp"
#include "smc/lexer.hpp"
#include "smc/model.hpp"
#include "smc/property.hpp"

namespace smc {

namespace detail {

inline bool is_reserved(std::string_view name) {
  static constexpr std::array<std::string_view, 11> words = {
      "X", "F", "G", "U", "true", "false", "const", "var", "init", "bits", "property"};
  for (auto w : words) {
    if (w == name) return true;
  }
  return false;
}

class ModelParser {
 public:
  explicit ModelParser(std::string_view src) : src_(src), cur_(tokenize(src)) {}

  Mdp parse() {
    while (!cur_.at(TokenKind::end)) {
      if (cur_.at_keyword("const")) {
        parse_constant();
      } else if (cur_.at_keyword("var")) {
        parse_variable();
      } else if (cur_.at_keyword("property")) {
        parse_named_property();
      } else if (cur_.at(TokenKind::lbracket)) {
        parse_command();
      } else {
        cur_.fail("expected 'const', 'var', 'property' or a command, found " + cur_.found());
      }
    }
    if (mdp_.commands.empty()) throw SemanticError("model declares no commands");
    for (const auto& [prop, where] : pending_properties_) {
      try {
        bind(parse_property(prop.text), mdp_);
      } catch (const SemanticError& e) {
        semantic(where, std::string(e.what()) + " (property \"" + prop.name + "\")");
      }
    }
    return std::move(mdp_);
  }

 private:
  [[noreturn]] static void semantic(const Token& at, const std::string& message) {
    throw SemanticError(std::to_string(at.line) + ":" + std::to_string(at.column) + ": " + message);
  }

  void declare(const Token& name) {
    if (is_reserved(name.text)) semantic(name, "'" + name.text + "' is a reserved word");
    if (!names_.insert(name.text).second) semantic(name, "duplicate name '" + name.text + "'");
  }

  // -- declarations ---------------------------------------------------------

  void parse_constant() {
    cur_.expect_keyword("const");
    const Token name = cur_.expect(TokenKind::identifier, "constant name");
    cur_.expect(TokenKind::eq);
    const Value v = constant_int(parse_expr(false), name);
    cur_.expect(TokenKind::semicolon);
    declare(name);
    mdp_.constants[name.text] = v;
  }

  void parse_variable() {
    cur_.expect_keyword("var");
    const Token name = cur_.expect(TokenKind::identifier, "variable name");
    cur_.expect(TokenKind::colon);
    cur_.expect(TokenKind::lbracket);
    const Token lo_tok = cur_.peek();
    VariableDecl v;
    v.name = name.text;
    v.lower = constant_int(parse_expr(false), lo_tok);
    cur_.expect(TokenKind::dotdot);
    v.upper = constant_int(parse_expr(false), lo_tok);
    cur_.expect(TokenKind::rbracket);
    cur_.expect_keyword("init");
    const Token init_tok = cur_.peek();
    v.init = constant_int(parse_expr(false), init_tok);
    v.bit_width = v.lower <= v.upper ? minimal_bit_width(v.lower, v.upper) : 1;
    if (cur_.at_keyword("bits")) {
      cur_.next();
      const Token& b = cur_.expect(TokenKind::integer, "bit width");
      const unsigned long bits = std::stoul(b.text);
      if (bits < v.bit_width || bits > 63) {
        semantic(b, "bit width " + b.text + " cannot encode [" + std::to_string(v.lower) + ".." +
                        std::to_string(v.upper) + "]");
      }
      v.bit_width = static_cast<unsigned>(bits);
    }
    cur_.expect(TokenKind::semicolon);
    if (v.lower > v.upper) semantic(lo_tok, "empty domain for '" + v.name + "'");
    if (v.bit_width > 63) semantic(lo_tok, "domain of '" + v.name + "' is too wide");
    if (v.init < v.lower || v.init > v.upper) {
      semantic(init_tok, "initial value " + std::to_string(v.init) + " of '" + v.name +
                             "' outside [" + std::to_string(v.lower) + ".." +
                             std::to_string(v.upper) + "]");
    }
    declare(name);
    mdp_.variables.push_back(std::move(v));
  }

  void parse_named_property() {
    const Token kw = cur_.peek();
    cur_.expect_keyword("property");
    const Token name = cur_.expect(TokenKind::string, "property name");
    cur_.expect(TokenKind::eq);
    const std::size_t begin = cur_.peek().offset;
    PropertyParser parser(cur_);
    parser.parse_or();
    const Token& semi = cur_.expect(TokenKind::semicolon);
    std::string text(src_.substr(begin, semi.offset - begin));
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    for (const auto& [p, where] : pending_properties_) {
      if (p.name == name.text) semantic(name, "duplicate property \"" + name.text + "\"");
    }
    NamedProperty prop{name.text, std::move(text)};
    mdp_.properties.push_back(prop);
    pending_properties_.emplace_back(std::move(prop), kw);
  }

  void parse_command() {
    const Token start = cur_.peek();
    cur_.expect(TokenKind::lbracket);
    Command cmd;
    if (cur_.at(TokenKind::identifier)) cmd.label = cur_.next().text;
    cur_.expect(TokenKind::rbracket);
    const Token guard_tok = cur_.peek();
    cmd.guard = parse_expr(true);
    if (!cmd.guard.is_boolean()) semantic(guard_tok, "guard must be a boolean expression");
    cur_.expect(TokenKind::arrow);

    if (starts_updates()) {
      cmd.branches.push_back(Branch{Rational(1), parse_updates()});
    } else {
      do {
        Branch b;
        b.weight = parse_weight();
        cur_.expect(TokenKind::colon);
        b.updates = parse_updates();
        cmd.branches.push_back(std::move(b));
      } while (cur_.accept(TokenKind::plus));
    }
    cur_.expect(TokenKind::semicolon);
    try {
      finalize_command(cmd);
    } catch (const SemanticError& e) {
      semantic(start, e.what());
    }
    mdp_.commands.push_back(std::move(cmd));
  }

  bool starts_updates() const {
    if (cur_.at_keyword("true")) return true;
    return cur_.at(TokenKind::lparen) && cur_.peek(1).kind == TokenKind::identifier &&
           cur_.peek(2).kind == TokenKind::prime;
  }

  std::vector<Update> parse_updates() {
    std::vector<Update> out;
    if (cur_.at_keyword("true")) {
      cur_.next();
      return out;
    }
    std::set<std::size_t> seen;
    do {
      cur_.expect(TokenKind::lparen);
      const Token name = cur_.expect(TokenKind::identifier, "variable");
      const std::ptrdiff_t idx = mdp_.variable_index(name.text);
      if (idx < 0) semantic(name, "unknown variable '" + name.text + "'");
      if (!seen.insert(static_cast<std::size_t>(idx)).second) {
        semantic(name, "variable '" + name.text + "' updated twice");
      }
      cur_.expect(TokenKind::prime);
      cur_.expect(TokenKind::eq);
      const Token value_tok = cur_.peek();
      Expr value = parse_expr(true);
      if (value.is_boolean()) semantic(value_tok, "update of '" + name.text + "' must be an integer");
      cur_.expect(TokenKind::rparen);
      out.push_back(Update{static_cast<std::size_t>(idx), std::move(value)});
    } while (cur_.accept(TokenKind::amp));
    return out;
  }

  // -- weights: constant rational expressions -------------------------------

  Rational parse_weight() {
    Rational r = parse_weight_term();
    while (cur_.at(TokenKind::plus) || cur_.at(TokenKind::minus)) {
      const bool add = cur_.next().kind == TokenKind::plus;
      const Rational rhs = parse_weight_term();
      if (add) {
        r += rhs;
      } else {
        r -= rhs;
      }
    }
    return r;
  }

  Rational parse_weight_term() {
    Rational r = parse_weight_factor();
    while (cur_.at(TokenKind::star) || cur_.at(TokenKind::slash)) {
      const Token op = cur_.next();
      const Rational rhs = parse_weight_factor();
      if (op.kind == TokenKind::star) {
        r *= rhs;
      } else {
        if (rhs == 0) semantic(op, "division by zero in weight");
        r /= rhs;
      }
    }
    return r;
  }

  Rational parse_weight_factor() {
    const Token t = cur_.peek();
    switch (t.kind) {
      case TokenKind::integer:
        cur_.next();
        return Rational(boost::multiprecision::cpp_int(
            t.text.substr(std::min(t.text.find_first_not_of('0'), t.text.size() - 1))));
      case TokenKind::decimal: {
        cur_.next();
        const auto dot = t.text.find('.');
        std::string digits = t.text.substr(0, dot) + t.text.substr(dot + 1);
        // cpp_int reads a leading 0 as an octal prefix
        digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
        boost::multiprecision::cpp_int scale = 1;
        for (std::size_t k = dot + 1; k < t.text.size(); ++k) scale *= 10;
        return Rational(boost::multiprecision::cpp_int(digits), scale);
      }
      case TokenKind::identifier: {
        cur_.next();
        const auto it = mdp_.constants.find(t.text);
        if (it == mdp_.constants.end()) semantic(t, "unknown constant '" + t.text + "' in weight");
        return Rational(it->second);
      }
      case TokenKind::lparen: {
        cur_.next();
        Rational r = parse_weight();
        cur_.expect(TokenKind::rparen);
        return r;
      }
      case TokenKind::minus:
        cur_.next();
        return -parse_weight_factor();
      default:
        cur_.fail("expected probability weight, found " + cur_.found());
    }
  }

  // -- integer / boolean expressions ----------------------------------------

  Value constant_int(const Expr& e, const Token& at) {
    if (e.is_boolean()) semantic(at, "expected an integer constant expression");
    try {
      return e.eval({});
    } catch (const RangeError& err) {
      semantic(at, err.what());
    }
  }

  Expr parse_expr(bool allow_vars) {
    allow_vars_ = allow_vars;
    return parse_ternary();
  }

  void require_int(const Expr& e, const Token& at) {
    if (e.is_boolean()) semantic(at, "expected an integer operand");
  }
  void require_bool(const Expr& e, const Token& at) {
    if (!e.is_boolean()) semantic(at, "expected a boolean operand");
  }

  Expr parse_ternary() {
    const Token at = cur_.peek();
    Expr c = parse_or();
    if (!cur_.accept(TokenKind::question)) return c;
    require_bool(c, at);
    const Token then_tok = cur_.peek();
    Expr a = parse_ternary();
    cur_.expect(TokenKind::colon);
    Expr b = parse_ternary();
    if (a.is_boolean() != b.is_boolean()) semantic(then_tok, "branches of '?' differ in type");
    return Expr{ExprOp::ite, 0, {}, {std::move(c), std::move(a), std::move(b)}};
  }

  Expr parse_or() {
    const Token at = cur_.peek();
    Expr e = parse_and();
    while (cur_.at(TokenKind::bar)) {
      const Token op = cur_.next();
      require_bool(e, at);
      Expr rhs = parse_and();
      require_bool(rhs, op);
      e = Expr::binary(ExprOp::logical_or, std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_and() {
    const Token at = cur_.peek();
    Expr e = parse_not();
    while (cur_.at(TokenKind::amp)) {
      const Token op = cur_.next();
      require_bool(e, at);
      Expr rhs = parse_not();
      require_bool(rhs, op);
      e = Expr::binary(ExprOp::logical_and, std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_not() {
    if (cur_.at(TokenKind::bang)) {
      const Token op = cur_.next();
      Expr e = parse_not();
      require_bool(e, op);
      return Expr::unary(ExprOp::logical_not, std::move(e));
    }
    return parse_comparison();
  }

  Expr parse_comparison() {
    const Token at = cur_.peek();
    Expr lhs = parse_additive();
    ExprOp op;
    switch (cur_.peek().kind) {
      case TokenKind::eq: op = ExprOp::eq; break;
      case TokenKind::ne: op = ExprOp::ne; break;
      case TokenKind::lt: op = ExprOp::lt; break;
      case TokenKind::le: op = ExprOp::le; break;
      case TokenKind::gt: op = ExprOp::gt; break;
      case TokenKind::ge: op = ExprOp::ge; break;
      default: return lhs;
    }
    const Token op_tok = cur_.next();
    Expr rhs = parse_additive();
    if (op == ExprOp::eq || op == ExprOp::ne) {
      if (lhs.is_boolean() != rhs.is_boolean()) semantic(op_tok, "comparison of mixed types");
    } else {
      require_int(lhs, at);
      require_int(rhs, op_tok);
    }
    return Expr::binary(op, std::move(lhs), std::move(rhs));
  }

  Expr parse_additive() {
    const Token at = cur_.peek();
    Expr e = parse_multiplicative();
    while (cur_.at(TokenKind::plus) || cur_.at(TokenKind::minus)) {
      const Token op = cur_.next();
      require_int(e, at);
      Expr rhs = parse_multiplicative();
      require_int(rhs, op);
      e = Expr::binary(op.kind == TokenKind::plus ? ExprOp::add : ExprOp::sub, std::move(e),
                       std::move(rhs));
    }
    return e;
  }

  Expr parse_multiplicative() {
    const Token at = cur_.peek();
    Expr e = parse_unary();
    while (cur_.at(TokenKind::star) || cur_.at(TokenKind::slash) || cur_.at(TokenKind::percent)) {
      const Token op = cur_.next();
      require_int(e, at);
      Expr rhs = parse_unary();
      require_int(rhs, op);
      const ExprOp kind = op.kind == TokenKind::star    ? ExprOp::mul
                          : op.kind == TokenKind::slash ? ExprOp::div
                                                        : ExprOp::mod;
      e = Expr::binary(kind, std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_unary() {
    if (cur_.at(TokenKind::minus)) {
      const Token op = cur_.next();
      Expr e = parse_unary();
      require_int(e, op);
      if (e.op == ExprOp::literal) return Expr::literal(-e.value);
      return Expr::unary(ExprOp::neg, std::move(e));
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token t = cur_.peek();
    if (t.kind == TokenKind::integer) {
      cur_.next();
      try {
        return Expr::literal(std::stoll(t.text));
      } catch (const std::exception&) {
        throw ParseError("integer out of range", t.line, t.column);
      }
    }
    if (t.kind == TokenKind::lparen) {
      cur_.next();
      Expr e = parse_ternary();
      cur_.expect(TokenKind::rparen);
      return e;
    }
    if (t.kind == TokenKind::identifier) {
      cur_.next();
      if (t.text == "true" || t.text == "false") {
        // (1 = 1) keeps the node boolean-typed
        return Expr::binary(ExprOp::eq, Expr::literal(1), Expr::literal(t.text == "true" ? 1 : 0));
      }
      if (const auto it = mdp_.constants.find(t.text); it != mdp_.constants.end()) {
        return Expr::literal(it->second);
      }
      const std::ptrdiff_t idx = mdp_.variable_index(t.text);
      if (idx >= 0) {
        if (!allow_vars_) semantic(t, "variable '" + t.text + "' in constant expression");
        return Expr::variable(static_cast<std::size_t>(idx), t.text);
      }
      semantic(t, "unknown name '" + t.text + "'");
    }
    if (t.kind == TokenKind::decimal) {
      semantic(t, "decimal literal outside a probability weight");
    }
    cur_.fail("expected expression, found " + cur_.found());
  }

  std::string_view src_;
  TokenCursor cur_;
  Mdp mdp_;
  std::set<std::string> names_;
  std::vector<std::pair<NamedProperty, Token>> pending_properties_;
  bool allow_vars_ = true;
};

}  // namespace detail

/// Parses the flat guarded-command language (see docs/grammar.md).
inline Mdp parse_model(std::string_view text) { return detail::ModelParser(text).parse(); }

inline Mdp load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

/// A named property of `mdp`, or else `text` parsed as a formula; bound either way.
inline Formula resolve_property(const Mdp& mdp, std::string_view text) {
  for (const NamedProperty& p : mdp.properties) {
    if (p.name == text) return bind(parse_property(p.text), mdp);
  }
  return bind(parse_property(text), mdp);
}

}  // namespace smc
