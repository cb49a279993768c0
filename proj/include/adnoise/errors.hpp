#pragma once

#include <stdexcept>
#include <string>

namespace adnoise {

/// Root of the library's exception hierarchy. The CLI maps each subclass to
/// an exit code via `exit_code()`.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

/// Argument outside an operation's domain (bad level index, mismatched
/// dimensions, negative frequency, missing patch size, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Physical parameters that violate a model invariant (e.g. beta0*z0 <= 4).
class InvalidParameters : public Error {
 public:
  using Error::Error;
};

class InsufficientLevels : public Error {
 public:
  using Error::Error;
};

/// Eigensolver failure. The message carries grid or matrix diagnostics.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown in the master-equation stage (e.g. a generator that
/// cannot be symmetrized because detailed balance fails).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The chain has more than one closed communicating class, so the steady
/// state is not unique.
class ReducibilityError : public Error {
 public:
  using Error::Error;
};

/// The correlator time grid does not reach far enough into the tail.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace adnoise
