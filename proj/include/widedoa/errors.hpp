#pragma once

#include <stdexcept>
#include <string>

namespace widedoa {

// Precondition violated by a caller-supplied value (bad angle, empty range, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration or input files that are well-formed but inconsistent.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Numerical breakdown: rank-deficient subspaces, failed decompositions.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSubspaceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace widedoa
