#pragma once

#include <stdexcept>
#include <string>

namespace cogflex {

// Base for all library errors. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid arguments, malformed config, dimension mismatches. Exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Fewer qualifying runs than requested after all launches. Exit code 2.
class InsufficientRunsError : public Error {
 public:
  using Error::Error;
};

// Filesystem and serialization failures. Exit code 3.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training; carries enough context to reproduce.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cogflex
