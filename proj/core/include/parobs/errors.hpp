#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace parobs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: grid divisibility, eps <= 0, malformed config files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what), violations_{what} {}
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Evaluation outside the region where an operator is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Probe geometry violates the nesting of cylinders.
class GeometryError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class CertificationError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual, std::vector<double> trace = {})
      : Error(what), last_residual_(last_residual), trace_(std::move(trace)) {}

  double last_residual() const { return last_residual_; }
  // Residual history of the failing step, one entry per iteration.
  const std::vector<double>& trace() const { return trace_; }

 private:
  double last_residual_;
  std::vector<double> trace_;
};

}  // namespace parobs
