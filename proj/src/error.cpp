#include "iongate/error.hpp"

namespace iongate {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::UnstableConfiguration: return "UnstableConfiguration";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::ZigzagInstability: return "ZigzagInstability";
    case ErrorKind::InvalidCount: return "InvalidCount";
    case ErrorKind::OverlappingGates: return "OverlappingGates";
    case ErrorKind::NoFeasibleSolution: return "NoFeasibleSolution";
    case ErrorKind::IllConditionedPencil: return "IllConditionedPencil";
    case ErrorKind::CutoffInsufficient: return "CutoffInsufficient";
    case ErrorKind::StepNotConverged: return "StepNotConverged";
    case ErrorKind::MissingParameter: return "MissingParameter";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace iongate
