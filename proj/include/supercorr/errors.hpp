#pragma once

#include <stdexcept>
#include <string>

namespace supercorr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateLatticeError : Error { using Error::Error; };
struct InvalidSizeError : Error { using Error::Error; };
struct BasisMismatchError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct CutoffTooSmallError : Error { using Error::Error; };
struct EigensolverError : Error { using Error::Error; };
struct SingularModeError : Error { using Error::Error; };
struct ExcludedPointError : Error { using Error::Error; };
struct IncreaseRadiusError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct RankDeficientError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Raised when the gap assumption fails; `where` names the offending k-point.
struct MetallicSystemError : Error {
  MetallicSystemError(const std::string& msg, std::string where_)
      : Error(msg + " at " + where_), where(std::move(where_)) {}
  std::string where;
};

struct DefectTooStrongError : Error { using Error::Error; };

}  // namespace supercorr
