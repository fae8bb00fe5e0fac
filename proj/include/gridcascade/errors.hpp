#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

/// Error categories, surfaced by the CLI as distinct exit codes.
enum class ErrorCategory {
  usage = 1,
  parse = 2,
  validation = 3,
  solver = 4,
  io = 5,
};

const char* to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

/// Syntax or format error with a 1-based source location (0 = unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line = 0, int column = 0)
      : Error(ErrorCategory::parse, format(message, line, column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& message, int line, int column);
  int line_ = 0;
  int column_ = 0;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& message)
      : Error(ErrorCategory::solver, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCategory::io, message) {}
};

}  // namespace cascade
