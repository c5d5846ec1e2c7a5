#pragma once

#include <stdexcept>
#include <string>

namespace cwerm {

enum class ErrorKind {
  kInvalidArgument,
  kParse,
  kDuplicateId,
  kEmptyInput,
  kDimensionMismatch,
  kInsufficientData,
  kNumerical,
  kConfig,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& message) {
  return Error(ErrorKind::kInvalidArgument, message);
}

inline Error dimension_mismatch(const std::string& message) {
  return Error(ErrorKind::kDimensionMismatch, message);
}

inline Error config_error(const std::string& message) {
  return Error(ErrorKind::kConfig, message);
}

}  // namespace cwerm
