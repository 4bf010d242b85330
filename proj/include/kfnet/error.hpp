#pragma once

#include <stdexcept>
#include <string>

namespace kfnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value or argument violates its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix sizes do not line up (stale cache, wrong window length, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data is degenerate: empty, zero variance, too short.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or a singular system.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A JSON document is well formed but not a valid model or checkpoint.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace kfnet
