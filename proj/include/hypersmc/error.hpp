#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypersmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text could not be parsed; carries a 1-based source location.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// The task is well formed but cannot be run with the given settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Evaluation could not proceed (short path, missing binding, unresolved comparison).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Numerical routine failed to produce a certified answer.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypersmc
