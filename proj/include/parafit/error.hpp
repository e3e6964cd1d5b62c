#pragma once

#include <stdexcept>
#include <string>

namespace parafit {

enum class ErrorKind {
  kInvalidArgument,
  kDegenerateVector,
  kDiverged,
  kBadMagic,
  kTruncatedPayload,
  kCountMismatch,
  kNonUnitRow,
  kMalformedInput,
  kDuplicateId,
  kIo,
  kRewriteFailed,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace parafit
