#pragma once

#include <stdexcept>
#include <string>

namespace threadtrack {

// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up (vector lengths, matrix dims, param sets).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A forward cache was handed to a backward pass of a different or since
// updated parameter set.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

// Input files that fail parsing or validation. Carries the offending line
// (1-based, 0 when not applicable).
class LoadError : public Error {
 public:
  LoadError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Environment rejected an action (not a subset of the candidates, wrong
// size, duplicates).
class ActionError : public Error {
 public:
  using Error::Error;
};

}  // namespace threadtrack
