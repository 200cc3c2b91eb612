#pragma once

// Prescribed-performance controllers for one scheduled task.
//
// Case I (window already open at start): the active agents' distance to the
// target center is kept under a decaying upper funnel, every edge length
// under a decaying edge funnel, so all agents are inside the region by the
// window close.
//
// Case II (window opens later): the active agents additionally stay above a
// decaying lower funnel that reaches the region radius exactly at the window
// opening, which rules out early completion.

#include "qosppc/scenario.hpp"

#include <cstddef>
#include <vector>

namespace qosppc {

enum class ControlCase { CaseI, CaseII, Idle };

const char* to_string(ControlCase kind);

/// One entry of the execution log: which task runs, from when, and the
/// completion interval (lower, upper] of the assigned QoS level.
struct TaskWindow {
  int task = 0;
  double start = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Region target;
};

/// Initial edge-funnel width. Tight: margin * max{||x_ij(t0)||, r_min / (N - 1)}.
/// Uniform: gamma_bar for every edge, which leaves clustered agents room to
/// stretch while the active agent accelerates.
enum class EdgeWidth { Tight, Uniform };

/// Free constants of the synthesis; the theory only fixes open ranges.
struct SynthesisParams {
  /// Multiplier turning strict lower bounds on funnel initial widths into values.
  double margin = 1.05;
  /// Velocity gain as a multiple of the largest funnel rate.
  double gain_margin = 1.2;
  /// Case II: Delta = delta_frac * (||x - c|| - r).
  double delta_frac = 0.5;
  /// sigma as a fraction of its admissible upper bound.
  double sigma_frac = 0.9;
  double idle_kp = 1.0;
  double idle_kv = 2.0;
  EdgeWidth edge_width = EdgeWidth::Uniform;
};

/// Funnel for one active agent's distance to the target center.
struct TrackingFunnel {
  int agent = 0;
  double alpha0 = 0.0;  // Case II only
  double beta0 = 0.0;
  double delta = 0.0;   // Case II only
  double kappa1 = 0.0;  // Case I decay rate of the upper funnel
  double kappa2 = 0.0;  // Case II rate on [start, lower]
  double kappa3 = 0.0;  // Case II rate after lower
};

/// Funnel on one undirected edge's length.
struct EdgeFunnel {
  Edge edge;
  double gamma0 = 0.0;
  double mu1 = 0.0;     // Case I rate
  double kappa2 = 0.0;  // Case II rate on [start, lower]
  double knot = 0.0;    // Case II funnel value at lower
  double mu2 = 0.0;     // Case II rate after lower
};

struct TaskController {
  ControlCase kind = ControlCase::Idle;
  TaskWindow window;
  int agent_count = 0;
  int dimension = 0;
  double r_min = 0.0;
  double sigma = 0.0;
  double gamma_bar = 0.0;
  std::vector<TrackingFunnel> tracking;
  /// agent index -> slot in `tracking`, or -1 for passive agents.
  std::vector<int> tracking_slot;
  std::vector<EdgeFunnel> edges;
  std::vector<double> gains;
  double kp = 0.0;
  double kv = 0.0;

  /// Largest funnel decay rate of this controller.
  double max_rate() const;
};

/// CaseI iff lower <= start.
ControlCase classify_case(double start, double lower);

/// Edge-length spread allowed for any task: max of the longest initial edge,
/// 2 r_max and every supplied initial edge-funnel width.
double select_gamma_bar(const Scenario& scenario, const std::vector<double>& edge_widths);

/// Throws DegenerateWindow (upper <= start) and AgentInsideTarget (an active
/// agent sits on the center).
TaskController synth_case1(const AgentState& state, const TaskWindow& window, const Scenario& scenario,
                           const SynthesisParams& params = {});

/// Throws DegenerateWindow (lower <= start or upper <= lower) and
/// AgentInsideTarget (an active agent is already within the radius).
TaskController synth_case2(const AgentState& state, const TaskWindow& window, const Scenario& scenario,
                           const SynthesisParams& params = {});

/// Dispatches on classify_case(state.t, window.lower); window.start is
/// overwritten with state.t.
TaskController synthesize(const AgentState& state, TaskWindow window, const Scenario& scenario,
                          const SynthesisParams& params = {});

TaskController make_idle_controller(const Scenario& scenario, double kp, double kv);

/// Gain and parameter audit. Throws InvalidController naming the first
/// violated condition.
void validate_controller(const TaskController& controller);

struct FunnelBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Throws TimeBeforeStart.
FunnelBounds tracking_bounds(const TaskController& controller, std::size_t slot, double t);
double edge_bound(const TaskController& controller, std::size_t edge, double t);

struct NormalizedErrors {
  std::vector<double> tracking;  // one per tracking slot
  std::vector<double> edge;      // one per edge
};

/// Distance from a normalized error to its domain wall: 1 - xi for S1-type
/// errors, 1 - |xi| for S2-type.
double funnel_margin(ControlCase kind, bool tracking, double xi);

inline constexpr double kBoundGuard = 1e-9;
inline constexpr double kUnitVectorFloor = 1e-12;

/// Errors without the domain check.
NormalizedErrors compute_normalized_errors(const TaskController& controller, const Matrix& x, double t);
/// Throws BoundViolation if any error is within kBoundGuard of its wall.
NormalizedErrors normalized_errors(const TaskController& controller, const Matrix& x, double t);

enum class TransformKind { S1, S2 };

struct TransformValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// S1(z) = ln(1 / (1 - z)) on [0, 1); S2(z) = ln((1 + z) / (1 - z)) on (-1, 1).
/// Throws DomainError.
TransformValue transform(TransformKind kind, double z);

/// Per-agent inputs (one row per agent). Throws BoundViolation.
Matrix control_input(const TaskController& controller, const Matrix& x, const Matrix& v, double t);

/// u_i = -kp * sum_{j in N_i} (x_i - x_j) - kv * v_i.
Matrix idle_control(const Matrix& x, const Matrix& v, double kp, double kv, const CommGraph& graph);

}  // namespace qosppc
