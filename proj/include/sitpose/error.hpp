#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sitpose {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (dataset CSV, stream line, report text).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Geometry that makes an angle or phase undefined.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Model or ensemble file that cannot be decoded.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

/// A trainer failed to reach its stopping criterion or diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace sitpose
