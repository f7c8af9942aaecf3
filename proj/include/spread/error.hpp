#ifndef SPREAD_ERROR_HPP
#define SPREAD_ERROR_HPP

#include <optional>
#include <stdexcept>
#include <string>

namespace spread {

enum class ErrorCode {
  NotSymmetric,
  NotPositiveDefinite,
  DimensionMismatch,
  NonFinite,
  TangencyViolation,
  DegenerateColumn,
  DegenerateInit,
  TooLarge,
  InvalidArgument,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TangencyViolation: return "TangencyViolation";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::DegenerateInit: return "DegenerateInit";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

/// Library-wide exception. `index` carries the offending column or
/// iteration when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<long> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<long> index_;
};

}  // namespace spread

#endif  // SPREAD_ERROR_HPP
