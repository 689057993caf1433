#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ccs {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-supplied arguments violate an operation's precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonFiniteError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A singular-value based quantity needs a strictly positive trailing value.
class RankDeficiencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Anything that goes wrong reading or writing a file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content, located by path and 1-based line number.
class ParseError : public IoError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : IoError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class HeaderError : public ParseError {
 public:
  using ParseError::ParseError;
};

class TruncatedError : public ParseError {
 public:
  using ParseError::ParseError;
};

class RangeError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace ccs
