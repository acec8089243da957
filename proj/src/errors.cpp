#include "traceinv/errors.hpp"

namespace traceinv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnmatchedLocation: return "UnmatchedLocation";
    case ErrorKind::EmptyDomain: return "EmptyDomain";
    case ErrorKind::NonpositiveFlux: return "NonpositiveFlux";
    case ErrorKind::DegenerateBins: return "DegenerateBins";
    case ErrorKind::AlreadyTotal: return "AlreadyTotal";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::MaskMismatch: return "MaskMismatch";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::MomentOverflow: return "MomentOverflow";
    case ErrorKind::FactorizationFailed: return "FactorizationFailed";
    case ErrorKind::SingularFactor: return "SingularFactor";
    case ErrorKind::ModeSearchFailed: return "ModeSearchFailed";
    case ErrorKind::NonConcaveAtMode: return "NonConcaveAtMode";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
  }
  return "Unknown";
}

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FitDiverged:
    case ErrorKind::MomentOverflow:
    case ErrorKind::FactorizationFailed:
    case ErrorKind::SingularFactor:
    case ErrorKind::ModeSearchFailed:
    case ErrorKind::NonConcaveAtMode:
    case ErrorKind::NumericalDivergence:
      return false;
    default:
      return true;
  }
}

}  // namespace traceinv
