#ifndef PLCL_ERROR_HPP
#define PLCL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace plcl {

enum class ErrorKind {
  InvalidInput,
  DimensionMismatch,
  AllPointsIdentical,
  NumericalFailure,
  Infeasible,
  ParseError,
  InvariantViolation,
  InvalidSpec,
  EmptyInput,
  VersionMismatch,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::AllPointsIdentical: return "AllPointsIdentical";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so that
/// callers (and the CLI exit path) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace detail
}  // namespace plcl

#endif  // PLCL_ERROR_HPP
