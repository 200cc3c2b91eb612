#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qosppc {

enum class ErrorCode {
  InvalidScenario,
  DisjointnessViolation,
  DisconnectedGraph,
  MalformedBoundaries,
  BadRejectionPenalty,
  IndexOutOfRange,
  DimensionMismatch,
  EmptyTaskSet,
  QosOutOfRange,
  InstanceTooLarge,
  InfeasibleInstance,
  DegenerateWindow,
  AgentInsideTarget,
  TimeBeforeStart,
  BoundViolation,
  DomainError,
  WrongCase,
  InvalidController,
  NonFiniteState,
  DeadlinePassed,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Violation {
  ErrorCode code;
  std::string message;
};

/// Raised by scenario validation; carries every violated invariant, not just
/// the first one found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }
  bool has(ErrorCode code) const noexcept;

 private:
  std::vector<Violation> violations_;
};

}  // namespace qosppc
