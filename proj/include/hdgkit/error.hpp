#pragma once

#include <stdexcept>
#include <string>

namespace hdg {

/// Base class for every error raised by hdgkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file could be read but its content is malformed.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : ValidationError(what) {}

  /// 1-based line number, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// File system or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Feature pruning selected nothing (threshold factor too large, or no importance at all).
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdg
