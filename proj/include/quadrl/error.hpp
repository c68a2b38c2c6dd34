#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quadrl {

enum class ErrorCode {
  EmptyMesh,
  DegenerateBounds,
  InvalidFace,
  NonCanonicalFace,
  CoordinateOutOfRange,
  LengthNotMultipleOf12,
  MixedPadding,
  InconsistentFlag,
  TokenOutOfRange,
  NoArea,
  EmptySet,
  EmptyWindow,
  EmptyCorpus,
  NonFiniteLogProb,
  ShapeMismatch,
  WindowOutOfRange,
  TokenOutOfVocab,
  InsufficientData,
  StarvationTimeout,
  InvalidArgument,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace quadrl
