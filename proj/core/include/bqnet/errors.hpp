#pragma once

#include <stdexcept>
#include <string>

namespace bqnet {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, routing rows that do not sum to one,
// non-monotone tables.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A distribution parameter outside its admissible range.
class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Evaluation outside the domain an object was built for (e.g. a grid
// kernel queried beyond its last node).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// The requested operation has no implementation for this representation
// (e.g. uniformization on a network with non-exponential service).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Renewal grid is too coarse for the service laws it has to resolve.
class RefinementRequired : public Error {
 public:
  using Error::Error;
};

// A computation would exceed its configured memory / work budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last, double previous)
      : Error(what), last_(last), previous_(previous) {}

  double last_estimate() const noexcept { return last_; }
  double previous_estimate() const noexcept { return previous_; }

 private:
  double last_;
  double previous_;
};

}  // namespace bqnet
