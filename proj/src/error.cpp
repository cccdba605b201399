#include "code2seq/error.hpp"

namespace code2seq {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidId: return "invalid-id";
    case ErrorCode::kMalformedText: return "malformed-text";
    case ErrorCode::kMalformedAst: return "malformed-ast";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kNotAMethod: return "not-a-method";
    case ErrorCode::kTooFewTerminals: return "too-few-terminals";
    case ErrorCode::kVocabularyOverflow: return "vocabulary-overflow";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kEmptySequence: return "empty-sequence";
    case ErrorCode::kInvalidIndex: return "invalid-index";
    case ErrorCode::kGraphReuse: return "graph-reuse";
    case ErrorCode::kNumericDivergence: return "numeric-divergence";
    case ErrorCode::kEmptyContexts: return "empty-contexts";
    case ErrorCode::kAllMasked: return "all-masked";
    case ErrorCode::kMismatchedExample: return "mismatched-example";
    case ErrorCode::kEmptyCandidateSet: return "empty-candidate-set";
    case ErrorCode::kMissingCheckpoint: return "missing-checkpoint";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kCorruptFile: return "corrupt-file";
    case ErrorCode::kNoParsableFiles: return "no-parsable-files";
    case ErrorCode::kConfigError: return "config-error";
  }
  return "unknown";
}

}  // namespace code2seq
