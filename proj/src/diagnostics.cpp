#include "qosppc/diagnostics.hpp"

#include "qosppc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qosppc {

namespace {

double quadratic_part(const AgentState& state, const TaskController& c, double coeff) {
  double total = 0.0;
  for (int i = 0; i < c.agent_count; ++i) {
    const Vector y = state.x.row(i).transpose() - c.window.target.center;
    const Vector v = state.v.row(i).transpose();
    total += c.gains[static_cast<std::size_t>(i)] * coeff * y.squaredNorm() + 2.0 * coeff * y.dot(v) + v.squaredNorm();
  }
  return 0.5 * total;
}

double error_part(const AgentState& state, const TaskController& c) {
  const NormalizedErrors xi = normalized_errors(c, state.x, state.t);
  const TransformKind tracking_kind = c.kind == ControlCase::CaseI ? TransformKind::S1 : TransformKind::S2;
  double total = 0.0;
  for (double e : xi.edge) total += std::pow(transform(TransformKind::S1, e).value, 2);
  for (double z : xi.tracking) total += std::pow(transform(tracking_kind, z).value, 2);
  return 0.5 * total;
}

}  // namespace

double lyapunov_coefficient(const TaskController& c, V2Branch branch) {
  if (c.kind == ControlCase::CaseI) return c.max_rate();
  double coeff = 0.0;
  if (branch == V2Branch::Approach) {
    for (const auto& f : c.tracking) coeff = std::max(coeff, f.kappa2);
    for (const auto& e : c.edges) coeff = std::max(coeff, e.kappa2);
  } else {
    for (const auto& f : c.tracking) coeff = std::max(coeff, f.kappa3);
  }
  return coeff;
}

double lyapunov_v1(const AgentState& state, const TaskController& c) {
  if (c.kind != ControlCase::CaseI) throw Error(ErrorCode::WrongCase, "V1 applies to Case I controllers");
  return quadratic_part(state, c, lyapunov_coefficient(c)) + error_part(state, c);
}

double lyapunov_v2(const AgentState& state, const TaskController& c, V2Branch branch) {
  if (c.kind != ControlCase::CaseII) throw Error(ErrorCode::WrongCase, "V2 applies to Case II controllers");
  return quadratic_part(state, c, lyapunov_coefficient(c, branch)) + error_part(state, c);
}

double lyapunov_v2(const AgentState& state, const TaskController& c) {
  return lyapunov_v2(state, c, state.t <= c.window.lower ? V2Branch::Approach : V2Branch::Closing);
}

MonotoneVerdict check_monotone(std::span<const std::pair<double, double>> series, double tolerance) {
  MonotoneVerdict verdict;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    const double increment = series[i + 1].second - series[i].second;
    verdict.worst_increment = std::max(verdict.worst_increment, increment);
    if (increment > tolerance && !verdict.failure_index) {
      verdict.pass = false;
      verdict.failure_index = i;
    }
  }
  return verdict;
}

namespace {

AgentState state_of(const Sample& s) { return AgentState{s.x, s.v, s.t}; }

bool close(const Matrix& a, const Matrix& b, double rel) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() <= rel * scale;
}

bool close(double a, double b, double rel) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= rel * (1.0 + std::max(std::abs(a), std::abs(b)));
}

constexpr double kReplayTolerance = 1e-9;

// Index of the sample with exactly time t, if any.
std::optional<std::size_t> find_time(const std::vector<Sample>& samples, double t) {
  const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const Sample& s, double value) { return s.t < value; });
  if (it == samples.end() || it->t != t) return std::nullopt;
  return static_cast<std::size_t>(it - samples.begin());
}

std::string task_tag(int id) { return "task " + std::to_string(id) + ": "; }

}  // namespace

CertificateReport verify_trace(const MissionTrace& trace, const Scenario& scenario, const Schedule& schedule) {
  CertificateReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto& samples = trace.samples;
  report.monotone_tolerance = 1e-3 * trace.config.dt;
  report.agent_margin.assign(static_cast<std::size_t>(scenario.agent_count()), nan);
  report.edge_margin.assign(scenario.graph.edge_count(), nan);
  const auto fail = [&report](std::string message) { report.failures.push_back(std::move(message)); };
  const auto lower_margin = [](double& slot, double value) {
    slot = std::isnan(slot) ? value : std::min(slot, value);
  };

  if (trace.status != RunStatus::Completed) {
    fail(std::string("mission status ") + to_string(trace.status) + (trace.message.empty() ? "" : ": " + trace.message));
  }
  if (samples.empty()) fail("trace has no samples");
  for (std::size_t s = 1; s < samples.size(); ++s) {
    if (!(samples[s].t > samples[s - 1].t)) {
      fail("sample times not strictly increasing at row " + std::to_string(s));
      report.integrity_ok = false;
      break;
    }
  }

  // Controller responsible for each sample: index into `controllers`, -1 idle, -2 unknown.
  std::vector<int> owner(samples.size(), -2);
  std::vector<TaskController> controllers;
  const TaskController idle =
      make_idle_controller(scenario, trace.config.synthesis.idle_kp, trace.config.synthesis.idle_kv);

  const std::vector<int> executed = schedule.executed();
  double mission_end = 0.0;
  bool all_complete = true;
  for (std::size_t k = 0; k < executed.size(); ++k) {
    const int id = executed[k];
    const TaskSpec& task = scenario.task(id);
    TaskCertificate cert;
    cert.task = id;
    cert.assigned_qos = schedule.qos_of(id);
    cert.lower = task.boundaries[static_cast<std::size_t>(cert.assigned_qos)];
    cert.upper = task.boundaries[static_cast<std::size_t>(cert.assigned_qos - 1)];

    const ExecutionRecord* record = k < trace.executions.size() ? &trace.executions[k] : nullptr;
    if (record == nullptr || record->task != id || !record->completion) {
      fail(task_tag(id) + "incomplete execution");
      all_complete = false;
      report.tasks.push_back(cert);
      break;
    }
    cert.start = record->start;
    cert.completion = record->completion;
    cert.kind = record->kind;
    cert.max_input = record->max_input;
    mission_end = *record->completion;

    const auto first = find_time(samples, record->start);
    const auto last = find_time(samples, *record->completion);
    if (!first || !last) {
      fail(task_tag(id) + "start or completion sample missing from the trace");
      all_complete = false;
      report.tasks.push_back(cert);
      break;
    }

    TaskWindow window;
    window.task = id;
    window.lower = cert.lower;
    window.upper = cert.upper;
    window.target = task.region;
    TaskController controller;
    try {
      controller = synthesize(state_of(samples[*first]), window, scenario, trace.config.synthesis);
    } catch (const Error& err) {
      fail(task_tag(id) + "controller synthesis failed: " + err.what());
      report.tasks.push_back(cert);
      continue;
    }
    if (controller.kind != record->kind) fail(task_tag(id) + "recorded case does not match the re-synthesized one");
    try {
      validate_controller(controller);
      cert.gains_ok = true;
    } catch (const Error& err) {
      fail(task_tag(id) + "gain audit: " + err.what());
    }
    const int controller_index = static_cast<int>(controllers.size());
    controllers.push_back(controller);

    std::optional<double> xi_mismatch;
    for (std::size_t s = *first; s <= *last; ++s) {
      const Sample& sample = samples[s];
      if (s < *last) owner[s] = controller_index;
      const NormalizedErrors xi = compute_normalized_errors(controller, sample.x, sample.t);
      for (std::size_t slot = 0; slot < xi.tracking.size(); ++slot) {
        const double m = funnel_margin(controller.kind, true, xi.tracking[slot]);
        cert.min_tracking_margin = std::min(cert.min_tracking_margin, m);
        lower_margin(report.agent_margin[static_cast<std::size_t>(controller.tracking[slot].agent)], m);
        if (s < *last && !close(sample.xi_track(controller.tracking[slot].agent), xi.tracking[slot], kReplayTolerance)) {
          xi_mismatch = xi_mismatch ? xi_mismatch : sample.t;
        }
      }
      for (std::size_t e = 0; e < xi.edge.size(); ++e) {
        const double m = funnel_margin(controller.kind, false, xi.edge[e]);
        cert.min_edge_margin = std::min(cert.min_edge_margin, m);
        lower_margin(report.edge_margin[e], m);
        if (s < *last && !close(sample.xi_edge(static_cast<Eigen::Index>(e)), xi.edge[e], kReplayTolerance)) {
          xi_mismatch = xi_mismatch ? xi_mismatch : sample.t;
        }
      }
      const bool inside = cert.min_tracking_margin > kBoundGuard && cert.min_edge_margin > kBoundGuard;
      if (!inside) {
        cert.funnels_ok = false;
        continue;
      }
      const AgentState state = state_of(sample);
      if (controller.kind == ControlCase::CaseI) {
        cert.v_series.emplace_back(sample.t, lyapunov_v1(state, controller));
      } else if (sample.t <= controller.window.lower) {
        cert.v_series.emplace_back(sample.t, lyapunov_v2(state, controller, V2Branch::Approach));
        cert.v_at_lower = std::make_pair(cert.v_series.back().second,
                                         lyapunov_v2(state, controller, V2Branch::Closing));
      } else {
        cert.v_series_closing.emplace_back(sample.t, lyapunov_v2(state, controller, V2Branch::Closing));
      }
    }
    if (xi_mismatch) {
      report.integrity_ok = false;
      fail(task_tag(id) + "recorded normalized errors disagree with recomputation at t=" + std::to_string(*xi_mismatch));
    }
    if (!cert.funnels_ok) {
      fail(task_tag(id) + "normalized error left its funnel (min tracking margin " +
           std::to_string(cert.min_tracking_margin) + ", min edge margin " + std::to_string(cert.min_edge_margin) + ")");
    }

    cert.monotone = check_monotone(cert.v_series, report.monotone_tolerance);
    cert.monotone_closing = check_monotone(cert.v_series_closing, report.monotone_tolerance);
    report.max_v_increment =
        std::max({report.max_v_increment, cert.monotone.worst_increment, cert.monotone_closing.worst_increment});
    if (!cert.monotone.pass || !cert.monotone_closing.pass) {
      fail(task_tag(id) + "Lyapunov function increased by " +
           std::to_string(std::max(cert.monotone.worst_increment, cert.monotone_closing.worst_increment)));
    }

    // Timing conditions.
    const double completion = *record->completion;
    cert.c2 = completion <= cert.upper && detect_completion(samples[*last].x, task.region);
    if (!cert.c2) fail(task_tag(id) + "not all agents inside the region by the window close");
    if (controller.kind == ControlCase::CaseII) {
      bool c1 = completion > cert.lower;
      for (std::size_t s = *first; s <= *last && samples[s].t <= cert.lower; ++s) {
        if (detect_completion(samples[s].x, task.region)) c1 = false;
      }
      cert.c1 = c1;
      if (!c1) fail(task_tag(id) + "completed before the window opened");
    }

    cert.achieved_qos = achieved_qos(completion, task);
    cert.qos_match = cert.achieved_qos == cert.assigned_qos && record->achieved_qos == cert.achieved_qos;
    if (!cert.qos_match) {
      fail(task_tag(id) + "achieved QoS " + std::to_string(cert.achieved_qos) + " differs from assigned " +
           std::to_string(cert.assigned_qos));
    }
    report.tasks.push_back(std::move(cert));
  }

  if (all_complete) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      if (samples[s].t >= mission_end && owner[s] == -2) owner[s] = -1;
    }
  }

  // Step-by-step replay of the recorded samples.
  bool replay_ok = true;
  for (std::size_t s = 0; s < samples.size() && replay_ok; ++s) {
    if (owner[s] == -2) continue;
    const TaskController& c = owner[s] >= 0 ? controllers[static_cast<std::size_t>(owner[s])] : idle;
    try {
      const Matrix u = control_input(c, samples[s].x, samples[s].v, samples[s].t);
      if (!close(u, samples[s].u, kReplayTolerance)) replay_ok = false;
      if (s + 1 < samples.size()) {
        const ControlLaw law = [&c](const Matrix& x, const Matrix& v, double t) { return control_input(c, x, v, t); };
        const AgentState next = rk4_step(state_of(samples[s]), samples[s + 1].t - samples[s].t, law);
        if (!close(next.x, samples[s + 1].x, kReplayTolerance) || !close(next.v, samples[s + 1].v, kReplayTolerance)) {
          replay_ok = false;
        }
      }
    } catch (const Error&) {
      replay_ok = false;
    }
    if (!replay_ok) {
      report.integrity_ok = false;
      fail("sample at t=" + std::to_string(samples[s].t) + " is inconsistent with the closed-loop dynamics");
    }
  }

  report.pass = report.failures.empty();
  return report;
}

}  // namespace qosppc
