#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ginue {

enum class ErrorKind {
  DimensionMismatch,
  NotSquare,
  NoConvergence,
  InvalidArgument,
  Precondition,
  QuadratureFailure,
  TraceBudget,
  ReplicaFailures,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::NotSquare: return "not_square";
    case ErrorKind::NoConvergence: return "no_convergence";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::QuadratureFailure: return "quadrature_failure";
    case ErrorKind::TraceBudget: return "trace_budget";
    case ErrorKind::ReplicaFailures: return "replica_failures";
  }
  return "unknown";
}

/// Base of every error thrown by the library. `kind()` is stable and
/// machine-readable; `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ginue
