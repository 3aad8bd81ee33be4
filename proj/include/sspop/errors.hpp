#pragma once

#include <stdexcept>
#include <limits>
#include <string>

namespace sspop {

// Every failure raised by the library derives from Error. The two branches
// map onto the CLI exit codes: InputError -> 1, NumericalFailure -> 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Argument outside the size domain [0, m] (or [0, m]^2 for kernels).
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

/// A model assumption or configuration precondition does not hold.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Malformed configuration document.
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

/// Operation not applicable to the given kernel shape (e.g. rank > 1 for K).
class MethodError : public InputError {
 public:
  using InputError::InputError;
};

/// Time step violates a stability or positivity bound.
class StepError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// Non-finite values in a quadrature or a simulated state.
class NumericalError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class NoRootError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class ConvergenceError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// Total mass vanished inside a regression window; the growth rate is -inf.
class ExtinctionError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
  static constexpr double rate() { return -std::numeric_limits<double>::infinity(); }
};

}  // namespace sspop
