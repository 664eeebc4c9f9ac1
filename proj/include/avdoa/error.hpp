#pragma once

#include <stdexcept>
#include <string>

namespace avdoa {

enum class ErrorCode {
  InvalidArgument,
  BehindCamera,
  DegenerateGeometry,
  SampleRateMismatch,
  SilentSignal,
  TooShort,
  AllZeroSpectrum,
  LagRangeTooSmall,
  ShapeMismatch,
  BatchTooSmall,
  EmptyDataset,
  NaNLoss,
  CardinalityMismatch,
  BadMagic,
  VersionMismatch,
  FileNotFound,
  BadWav,
  IoError,
  FormatError,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (the CLI in
// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Process exit status: 2 validation, 3 numeric failure, 4 I/O or file format.
int exit_code(ErrorCode code);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace avdoa
