#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgeoffload {

// Base for every error raised by the library. Callers that only need to
// report a failure can catch this; the subclasses exist so the CLI and the
// wire layer can map failures onto exit codes and ERROR message codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: weights that do not sum to one, a zero capacity in a
// weighted dimension, a pricing row missing the field its mode needs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input outside a function's mathematical domain (e.g. skewness of an empty
// layer list).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A job submission the scheduler refuses: duplicate id, infeasible gang.
class SubmissionError : public Error {
 public:
  using Error::Error;
};

// State machine misuse, e.g. progress reported for a job that is not running.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Scenario or job file that parses but fails validation. The message lists
// every offending field path.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Text that failed to parse. `line` and `column` are 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace edgeoffload
