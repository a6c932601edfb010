#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace welander {

enum class ErrorCode {
  InvalidParameters,
  ComplexSpectrum,
  SingularMatrix,
  ZeroEigenvalue,
  NoSignChange,
  NotSlidingPoint,
  BoundaryEquilibriumCollision,
  TangencyDegenerate,
  DegenerateAlpha,
  NonpositiveSmoothing,
  WrongRegime,
  DegenerateBeta,
  OutOfDomain,
  AsymptoteReached,
  BracketFailure,
  NonzeroOffset,
  EscapingStart,
  IntegrationDefect,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace welander
