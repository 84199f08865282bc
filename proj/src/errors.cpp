#include "flexsense/errors.hpp"

namespace flexsense {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "invalid geometry";
    case ErrorKind::InvalidScenario: return "invalid scenario";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::InsufficientPilots: return "insufficient pilots";
    case ErrorKind::SocUnidentifiable: return "SOC unidentifiable";
    case ErrorKind::FocUnidentifiable: return "FOC unidentifiable";
    case ErrorKind::IllConditionedCalibration: return "ill-conditioned calibration";
    case ErrorKind::UnderdeterminedLs: return "underdetermined LS";
    case ErrorKind::ZeroChannel: return "zero channel";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

}  // namespace flexsense
