#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace percoldp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation supplied by the caller.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A measure or kernel/density pair failed an admissibility requirement.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// Internal tables disagree with each other (should not happen).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Giant cluster too small for the requested operation.
class DegenerateClusterError : public Error {
 public:
  using Error::Error;
};

/// Resampling for the origin-in-giant event ran out of tries.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::size_t tries)
      : Error(what), tries_(tries) {}
  std::size_t tries() const noexcept { return tries_; }

 private:
  std::size_t tries_;
};

/// Floating point failure: overflow, underflow, stagnation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Iterative method hit its iteration cap; carries the last residual.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Operator is not irreducible on its index set.
class StructureError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace percoldp
