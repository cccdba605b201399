#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace code2seq {

// Machine-readable failure categories. The CLI prints `error: <code>: <message>`.
enum class ErrorCode {
  kInvalidArgument,
  kInvalidId,
  kMalformedText,
  kMalformedAst,
  kParseError,
  kNotAMethod,
  kTooFewTerminals,
  kVocabularyOverflow,
  kShapeMismatch,
  kEmptySequence,
  kInvalidIndex,
  kGraphReuse,
  kNumericDivergence,
  kEmptyContexts,
  kAllMasked,
  kMismatchedExample,
  kEmptyCandidateSet,
  kMissingCheckpoint,
  kIoError,
  kVersionMismatch,
  kCorruptFile,
  kNoParsableFiles,
  kConfigError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace code2seq
