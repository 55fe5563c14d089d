#pragma once

#include <stdexcept>
#include <string>

namespace pfc {

// Base of every failure raised by the library. Subclasses map onto the
// CLI exit codes: ConfigError family -> 2, everything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonZeroMean : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class SolverDivergence : public SolverError {
 public:
  using SolverError::SolverError;
};

class NewtonDivergence : public SolverError {
 public:
  using SolverError::SolverError;
};

class DomainEscape : public SolverError {
 public:
  using SolverError::SolverError;
};

class RootSolveFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace pfc
