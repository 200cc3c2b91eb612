#include "qosppc/errors.hpp"

#include <algorithm>

namespace qosppc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::DisjointnessViolation: return "DisjointnessViolation";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::MalformedBoundaries: return "MalformedBoundaries";
    case ErrorCode::BadRejectionPenalty: return "BadRejectionPenalty";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyTaskSet: return "EmptyTaskSet";
    case ErrorCode::QosOutOfRange: return "QosOutOfRange";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::InfeasibleInstance: return "InfeasibleInstance";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::AgentInsideTarget: return "AgentInsideTarget";
    case ErrorCode::TimeBeforeStart: return "TimeBeforeStart";
    case ErrorCode::BoundViolation: return "BoundViolation";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::WrongCase: return "WrongCase";
    case ErrorCode::InvalidController: return "InvalidController";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DeadlinePassed: return "DeadlinePassed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out = std::to_string(violations.size()) + " violation(s)";
  for (const auto& v : violations) {
    out += "; ";
    out += to_string(v.code);
    out += ": ";
    out += v.message;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(violations.empty() ? ErrorCode::InvalidScenario : violations.front().code,
            join_violations(violations)),
      violations_(std::move(violations)) {}

bool ValidationError::has(ErrorCode code) const noexcept {
  return std::any_of(violations_.begin(), violations_.end(),
                     [code](const Violation& v) { return v.code == code; });
}

}  // namespace qosppc
