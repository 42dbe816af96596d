#pragma once

#include <stdexcept>
#include <string>

namespace mcsis {

enum class ErrorCode {
  InvalidArgument,
  DegenerateInput,
  TooFewSamples,
  SingularGram,
  InvalidDims,
  InvalidSize,
  EmptyDataset,
  AllColumnsDegenerate,
  ParseError,
  MissingValue,
  NonNumericColumn,
  Io,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code tells callers (and the CLI
// exit-code mapping) which failure class occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::AllColumnsDegenerate: return "AllColumnsDegenerate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::NonNumericColumn: return "NonNumericColumn";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace mcsis
