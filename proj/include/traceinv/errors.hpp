#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace traceinv {

/// Named failure conditions raised by the library.
enum class ErrorKind {
  // input / configuration
  UnmatchedLocation,
  EmptyDomain,
  NonpositiveFlux,
  DegenerateBins,
  AlreadyTotal,
  DimensionMismatch,
  InvalidParams,
  LengthMismatch,
  ZeroVariance,
  MaskMismatch,
  DomainError,
  Config,
  Io,
  // numerical
  FitDiverged,
  MomentOverflow,
  FactorizationFailed,
  SingularFactor,
  ModeSearchFailed,
  NonConcaveAtMode,
  NumericalDivergence,
};

std::string_view to_string(ErrorKind kind);

/// True for failures caused by bad input or configuration (CLI exit code 2);
/// false for numerical failures (exit code 3).
bool is_input_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Same kind, message prefixed with `context`.
  Error with_context(const std::string& context) const {
    Error e(*this);
    static_cast<std::runtime_error&>(e) = std::runtime_error(context + ": " + what());
    return e;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace traceinv
