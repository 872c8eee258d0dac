#pragma once

#include <stdexcept>
#include <string>

namespace elimpcl {

// Caller passed arguments that violate a precondition (wrong shape, bad
// range, missing field). Maps to process exit code 2 in the CLI.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation produced or received non-finite values. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// An input vector is too close to zero for the requested operation; the
// caller decides the fallback.
class DegenerateInputError : public std::runtime_error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : std::runtime_error(what) {}
};

// A run cannot proceed with the given configuration (e.g. every prototype
// collapsed). Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                    : what),
        line_(line) {}
  explicit ParseError(const std::string& what) : ParseError(what, 0) {}
  long line() const { return line_; }

 private:
  long line_ = 0;
};

}  // namespace elimpcl
