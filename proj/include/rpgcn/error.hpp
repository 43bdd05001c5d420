#pragma once

#include <stdexcept>
#include <string>

namespace rpgcn {

enum class ErrorKind {
  DimensionMismatch,
  NotSquare,
  NotSymmetric,
  NoConvergence,
  InvalidArgument,
  Io,
  Parse,
  NumericalFailure,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::NotSquare: return "not square";
    case ErrorKind::NotSymmetric: return "not symmetric";
    case ErrorKind::NoConvergence: return "no convergence";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::NumericalFailure: return "numerical failure";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rpgcn
