#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "smc/error.hpp"

namespace smc {

enum class TokenKind {
  identifier,
  integer,
  decimal,
  string,
  lparen,
  rparen,
  lbracket,
  rbracket,
  semicolon,
  colon,
  comma,
  plus,
  minus,
  star,
  slash,
  percent,
  eq,
  ne,
  lt,
  le,
  gt,
  ge,
  amp,
  bar,
  bang,
  arrow,
  prime,
  dotdot,
  question,
  end,
};

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;
  int column = 1;
  std::size_t offset = 0;  // byte offset into the source
};

inline const char* describe(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::integer: return "integer";
    case TokenKind::decimal: return "decimal";
    case TokenKind::string: return "string";
    case TokenKind::lparen: return "'('";
    case TokenKind::rparen: return "')'";
    case TokenKind::lbracket: return "'['";
    case TokenKind::rbracket: return "']'";
    case TokenKind::semicolon: return "';'";
    case TokenKind::colon: return "':'";
    case TokenKind::comma: return "','";
    case TokenKind::plus: return "'+'";
    case TokenKind::minus: return "'-'";
    case TokenKind::star: return "'*'";
    case TokenKind::slash: return "'/'";
    case TokenKind::percent: return "'%'";
    case TokenKind::eq: return "'='";
    case TokenKind::ne: return "'!='";
    case TokenKind::lt: return "'<'";
    case TokenKind::le: return "'<='";
    case TokenKind::gt: return "'>'";
    case TokenKind::ge: return "'>='";
    case TokenKind::amp: return "'&'";
    case TokenKind::bar: return "'|'";
    case TokenKind::bang: return "'!'";
    case TokenKind::arrow: return "'->'";
    case TokenKind::prime: return "'''";
    case TokenKind::dotdot: return "'..'";
    case TokenKind::question: return "'?'";
    case TokenKind::end: return "end of input";
  }
  return "token";
}

/// Splits model and property text into tokens. `//` starts a line comment.
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  auto peek = [&](std::size_t ahead) -> char {
    return i + ahead < src.size() ? src[i + ahead] : '\0';
  };

  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && peek(1) == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }

    Token tok{TokenKind::end, {}, line, col, i};
    const std::size_t start = i;

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        advance(1);
      }
      tok.kind = TokenKind::identifier;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      tok.kind = TokenKind::integer;
      // "0..1" is a range, "0.5" is a decimal
      if (peek(0) == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        advance(1);
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
        tok.kind = TokenKind::decimal;
      }
    } else if (c == '"') {
      advance(1);
      while (i < src.size() && src[i] != '"' && src[i] != '\n') advance(1);
      if (peek(0) != '"') throw ParseError("unterminated string", tok.line, tok.column);
      advance(1);
      tok.kind = TokenKind::string;
      tok.text = std::string(src.substr(start + 1, i - start - 2));
      out.push_back(std::move(tok));
      continue;
    } else {
      auto two = [&](char a, char b) { return c == a && peek(1) == b; };
      if (two('-', '>')) {
        tok.kind = TokenKind::arrow;
        advance(2);
      } else if (two('<', '=')) {
        tok.kind = TokenKind::le;
        advance(2);
      } else if (two('>', '=')) {
        tok.kind = TokenKind::ge;
        advance(2);
      } else if (two('!', '=')) {
        tok.kind = TokenKind::ne;
        advance(2);
      } else if (two('.', '.')) {
        tok.kind = TokenKind::dotdot;
        advance(2);
      } else if (two('=', '=')) {
        tok.kind = TokenKind::eq;
        advance(2);
      } else {
        switch (c) {
          case '(': tok.kind = TokenKind::lparen; break;
          case ')': tok.kind = TokenKind::rparen; break;
          case '[': tok.kind = TokenKind::lbracket; break;
          case ']': tok.kind = TokenKind::rbracket; break;
          case ';': tok.kind = TokenKind::semicolon; break;
          case ':': tok.kind = TokenKind::colon; break;
          case ',': tok.kind = TokenKind::comma; break;
          case '+': tok.kind = TokenKind::plus; break;
          case '-': tok.kind = TokenKind::minus; break;
          case '*': tok.kind = TokenKind::star; break;
          case '/': tok.kind = TokenKind::slash; break;
          case '%': tok.kind = TokenKind::percent; break;
          case '=': tok.kind = TokenKind::eq; break;
          case '<': tok.kind = TokenKind::lt; break;
          case '>': tok.kind = TokenKind::gt; break;
          case '&': tok.kind = TokenKind::amp; break;
          case '|': tok.kind = TokenKind::bar; break;
          case '!': tok.kind = TokenKind::bang; break;
          case '\'': tok.kind = TokenKind::prime; break;
          case '?': tok.kind = TokenKind::question; break;
          default:
            throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
        advance(1);
      }
    }
    tok.text = std::string(src.substr(start, i - start));
    out.push_back(std::move(tok));
  }
  out.push_back(Token{TokenKind::end, {}, line, col, i});
  return out;
}

// Cursor over a token vector shared by the model and property parsers.
class TokenCursor {
 public:
  explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t k = pos_ + ahead;
    return k < tokens_.size() ? tokens_[k] : tokens_.back();
  }
  bool at(TokenKind kind) const { return peek().kind == kind; }
  bool at_keyword(std::string_view word) const {
    return peek().kind == TokenKind::identifier && peek().text == word;
  }

  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }

  bool accept(TokenKind kind) {
    if (!at(kind)) return false;
    next();
    return true;
  }

  const Token& expect(TokenKind kind, std::string_view what = {}) {
    if (!at(kind)) {
      fail(std::string("expected ") + (what.empty() ? describe(kind) : std::string(what)) +
           ", found " + found());
    }
    return next();
  }

  void expect_keyword(std::string_view word) {
    if (!at_keyword(word)) fail("expected '" + std::string(word) + "', found " + found());
    next();
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, peek().line, peek().column);
  }

  std::string found() const {
    const Token& t = peek();
    if (t.kind == TokenKind::end) return "end of input";
    return "'" + t.text + "'";
  }

  std::size_t position() const { return pos_; }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace smc
