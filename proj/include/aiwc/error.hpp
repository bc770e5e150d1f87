#pragma once

#include <stdexcept>
#include <string>

namespace aiwc {

// Error taxonomy mirrored by the CLI exit codes:
//   ParseError -> 2, ExecutionError -> 3, IoError -> 4, SchemaError -> 5.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (kernel source, trace files, CSV contents).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, int line = 0, int column = 0)
      : Error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) +
                             ": " + message
                       : message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_ = 0;
  int column_ = 0;
};

// Runtime failures: fuel exhaustion, division by zero, domain violations.
class ExecutionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Predictor schema disagreement between a model and its input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A statistic whose definition requires nonzero response variance.
class DegenerateResponseError : public ExecutionError {
 public:
  using ExecutionError::ExecutionError;
};

}  // namespace aiwc
