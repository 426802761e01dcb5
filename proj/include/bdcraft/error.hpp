#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdcraft {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric routine was handed arguments that violate its preconditions
/// (mismatched dimensions, non-finite samples, oversized kernels).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A user-facing setting is out of range or unparseable.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data on disk is missing or malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A text file failed to parse; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An iterative solver produced a non-finite or degenerate state.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace bdcraft
