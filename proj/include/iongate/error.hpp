#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iongate {

/// Failure categories raised by the library. The CLI maps ConfigInvalid to
/// exit code 2 and every other kind to exit code 1.
enum class ErrorKind {
  InvalidArgument,
  NonConvergence,
  UnstableConfiguration,
  EmptyWindow,
  ZigzagInstability,
  InvalidCount,
  OverlappingGates,
  NoFeasibleSolution,
  IllConditionedPencil,
  CutoffInsufficient,
  StepNotConverged,
  MissingParameter,
  MissingValue,
  ConfigInvalid,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace iongate
