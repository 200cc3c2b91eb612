#pragma once

// Fixed-step RK4 integration of the double-integrator network under the
// hybrid task-execution protocol.

#include "qosppc/controller.hpp"
#include "qosppc/scenario.hpp"
#include "qosppc/scheduler.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qosppc {

struct SimConfig {
  double dt = 1e-3;
  bool refine_events = true;
  double event_tolerance = 1e-9;
  std::uint64_t seed = 42;
  /// A task still running at upper * deadline_guard is declared failed.
  double deadline_guard = 1.5;
  /// Idle-mode time after the last completion.
  double settle_horizon = 10.0;
  SynthesisParams synthesis;
};

/// u = f(x, v, t), one row per agent.
using ControlLaw = std::function<Matrix(const Matrix& x, const Matrix& v, double t)>;

/// Classical four-stage Runge-Kutta step of x' = v, v' = u. Throws
/// NonFiniteState.
AgentState rk4_step(const AgentState& state, double dt, const ControlLaw& control);

/// All agents inside the closed region.
bool detect_completion(const Matrix& x, const Region& region);

/// Last level k >= 1 whose interval (t^k, t^{k-1}] contains the completion
/// time, or 0 past the deadline.
int achieved_qos(double completion, const TaskSpec& task);

struct Sample {
  double t = 0.0;
  /// Index into MissionTrace::executions, or -1 for idle mode.
  int segment = -1;
  Matrix x;
  Matrix v;
  Matrix u;
  /// Per agent; NaN for passive agents and in idle mode.
  Vector xi_track;
  Vector lower;
  Vector upper;
  /// Per edge, in graph edge order; xi and gamma are NaN in idle mode.
  Vector edge_dist;
  Vector xi_edge;
  Vector gamma;
};

/// Builds a sample of the given state under `controller` (u recomputed).
Sample make_sample(const TaskController& controller, const AgentState& state, int segment);

enum class RunStatus { Completed, BoundViolation, DeadlinePassed, NonFiniteState };

const char* to_string(RunStatus status);

struct TaskRun {
  RunStatus status = RunStatus::Completed;
  std::optional<double> completion;
  /// State at the completion time (or at failure).
  AgentState final_state;
  /// Samples from the start up to, excluding, the completion instant.
  std::vector<Sample> samples;
  double max_input = 0.0;
  std::string message;
};

/// Steps the controller until every agent is inside the target region,
/// refining the completion instant by bisection on the last step.
TaskRun run_task(const AgentState& state, const TaskController& controller, const SimConfig& config,
                 int segment = 0);

struct ExecutionRecord {
  int task = 0;
  double start = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  ControlCase kind = ControlCase::CaseI;
  std::optional<double> completion;
  int assigned_qos = 0;
  int achieved_qos = 0;
  double max_input = 0.0;
};

struct MissionTrace {
  std::vector<Sample> samples;
  std::vector<ExecutionRecord> executions;
  /// Indexed by task id - 1; rejected or unfinished tasks stay at 0.
  std::vector<int> achieved;
  RunStatus status = RunStatus::Completed;
  int failed_task = 0;
  double failure_time = 0.0;
  std::string message;
  SimConfig config;
};

/// Executes the accepted tasks in schedule order, then settles in idle mode.
MissionTrace run_mission(const Scenario& scenario, const Schedule& schedule, const SimConfig& config);

/// Replaces every agent position with a uniform draw from the box
/// [lower, upper], redrawing until no agent starts inside a target region.
void randomize_initial_positions(ScenarioDescription& description, const Vector& lower, const Vector& upper,
                                 std::uint64_t seed);

}  // namespace qosppc
