#include "avdoa/error.hpp"

namespace avdoa {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::SilentSignal: return "SilentSignal";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::AllZeroSpectrum: return "AllZeroSpectrum";
    case ErrorCode::LagRangeTooSmall: return "LagRangeTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NaNLoss: return "NaNLoss";
    case ErrorCode::CardinalityMismatch: return "CardinalityMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::BadWav: return "BadWav";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NaNLoss:
      return 3;
    case ErrorCode::BadMagic:
    case ErrorCode::VersionMismatch:
    case ErrorCode::FileNotFound:
    case ErrorCode::BadWav:
    case ErrorCode::IoError:
    case ErrorCode::FormatError:
      return 4;
    default:
      return 2;
  }
}

}  // namespace avdoa
