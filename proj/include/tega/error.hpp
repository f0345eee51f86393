#pragma once

#include <stdexcept>
#include <string>

namespace tega {

enum class ErrorCode {
  EmptyCloud,
  DegenerateCloud,
  TooFewPoints,
  MissingNormals,
  NoTriangles,
  EmptyMesh,
  InvalidCount,
  UnknownPrompt,
  GenerationFailed,
  MissingViews,
  CaptionFailed,
  MergeFailed,
  JudgeFailed,
  JudgeProtocolError,
  SchemaViolation,
  InsufficientSynthetic,
  VocabularyMismatch,
  ParseError,
  EmptyDataset,
  EmptyVocabulary,
  NonPositiveTemperature,
  BackendUnreachable,
  IoError,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Single exception type for all module error paths; `code()` carries the
/// contract-level error kind and `stage()` the pipeline stage, when relevant.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string stage = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        stage_(std::move(stage)) {}

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace tega
