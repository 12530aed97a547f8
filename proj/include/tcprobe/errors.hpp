#pragma once

#include <stdexcept>
#include <string>

namespace tcprobe {

/// Input that violates a documented schema or invariant. Maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON in a log; carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Bad command-line usage or config combination. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fitting a classifier on data that contains only one class.
class SingleClassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tcprobe
