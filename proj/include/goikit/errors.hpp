#pragma once

#include <stdexcept>
#include <string>

namespace goikit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or pose is outside the domain of an operation (cheirality,
/// log at a rotation angle of pi).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: non-SPD metric, malformed scene, bad thresholds.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The observable index set is empty.
class UnobservableError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Gauss-Newton update left the basin guard radius.
class BasinEscapeError : public Error {
 public:
  using Error::Error;
};

/// Restricted curvature became singular during a solve.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

}  // namespace goikit
