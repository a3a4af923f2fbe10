#pragma once

#include <stdexcept>
#include <string>

namespace piezoamp {

/// Raised when inputs violate a physical or design constraint (bad parameters,
/// epsilon outside its admissible interval, amplifiers out of range, ...).
/// The CLI maps this to exit status 1.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown: non-convergent eigensolver, NaN in a trajectory,
/// singular factorization.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace piezoamp
