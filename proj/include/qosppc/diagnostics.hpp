#pragma once

// Trajectory monitors for the Lyapunov certificates and the funnel/timing
// guarantees, plus a full audit of a recorded mission.

#include "qosppc/controller.hpp"
#include "qosppc/scheduler.hpp"
#include "qosppc/simulator.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qosppc {

/// Case I certificate: quadratic form in (x_i - c, v_i) with a uniform
/// coefficient theta = max funnel rate, plus half the squared transformed
/// errors. Throws WrongCase and BoundViolation.
double lyapunov_v1(const AgentState& state, const TaskController& controller);

/// Case II has a different quadratic form before (Approach) and after
/// (Closing) the window opening.
enum class V2Branch { Approach, Closing };

double lyapunov_v2(const AgentState& state, const TaskController& controller, V2Branch branch);
/// Branch chosen by state.t: Approach for t <= lower.
double lyapunov_v2(const AgentState& state, const TaskController& controller);

/// Coefficient of the cross term of the quadratic form.
double lyapunov_coefficient(const TaskController& controller, V2Branch branch = V2Branch::Approach);

struct MonotoneVerdict {
  bool pass = true;
  double worst_increment = 0.0;
  /// Index i of the first forward difference V[i + 1] - V[i] over tolerance.
  std::optional<std::size_t> failure_index;
};

/// Series of (t, V) pairs, sorted by t.
MonotoneVerdict check_monotone(std::span<const std::pair<double, double>> series, double tolerance);

struct TaskCertificate {
  int task = 0;
  ControlCase kind = ControlCase::CaseI;
  std::optional<double> start;
  std::optional<double> completion;
  double lower = 0.0;
  double upper = 0.0;
  /// Case I: the whole task; Case II: the approach branch.
  std::vector<std::pair<double, double>> v_series;
  /// Case II closing branch.
  std::vector<std::pair<double, double>> v_series_closing;
  MonotoneVerdict monotone;
  MonotoneVerdict monotone_closing;
  /// Case II: both one-sided values at the last sample not after `lower`.
  std::optional<std::pair<double, double>> v_at_lower;
  double min_tracking_margin = 1.0;
  double min_edge_margin = 1.0;
  bool funnels_ok = true;
  std::optional<bool> c1;
  bool c2 = false;
  bool gains_ok = false;
  int assigned_qos = 0;
  int achieved_qos = 0;
  bool qos_match = false;
  double max_input = 0.0;
};

struct CertificateReport {
  std::vector<TaskCertificate> tasks;
  /// Smallest funnel margin seen per agent (NaN for passive agents) and per edge.
  std::vector<double> agent_margin;
  std::vector<double> edge_margin;
  double max_v_increment = 0.0;
  double monotone_tolerance = 0.0;
  bool integrity_ok = true;
  std::vector<std::string> failures;
  bool pass = false;
};

/// Re-synthesizes every controller from the recorded start states and
/// checks funnels, timing conditions, certificates, gains, achieved QoS and
/// step-by-step consistency of the recorded samples.
CertificateReport verify_trace(const MissionTrace& trace, const Scenario& scenario, const Schedule& schedule);

}  // namespace qosppc
