#pragma once

#include <stdexcept>
#include <string>

namespace smc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model or property text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// Well-formed text that violates a model rule (duplicate names, bad weights, ...).
class SemanticError : public Error {
 public:
  using Error::Error;
};

// An update drove a variable outside its declared domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A trace too short to decide a formula.
class TraceError : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace smc
