#include "craqreg/error.hpp"

namespace craqreg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegeneratePoint: return "DegeneratePoint";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::DegenerateHomography: return "DegenerateHomography";
    case ErrorKind::EmptyDetection: return "EmptyDetection";
    case ErrorKind::NoMatches: return "NoMatches";
    case ErrorKind::EstimationFailed: return "EstimationFailed";
    case ErrorKind::InvalidPolicy: return "InvalidPolicy";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::EmptyErrorList: return "EmptyErrorList";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace craqreg
