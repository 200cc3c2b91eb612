#include "qosppc/simulator.hpp"

#include "qosppc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace qosppc {

AgentState rk4_step(const AgentState& state, double dt, const ControlLaw& control) {
  const Matrix& x = state.x;
  const Matrix& v = state.v;
  const double t = state.t;
  const double half = 0.5 * dt;

  const Matrix a1 = control(x, v, t);
  const Matrix v2 = v + half * a1;
  const Matrix a2 = control(x + half * v, v2, t + half);
  const Matrix v3 = v + half * a2;
  const Matrix a3 = control(x + half * v2, v3, t + half);
  const Matrix v4 = v + dt * a3;
  const Matrix a4 = control(x + dt * v3, v4, t + dt);

  AgentState next;
  next.x = x + (dt / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
  next.v = v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  next.t = t + dt;
  if (!next.finite()) throw Error(ErrorCode::NonFiniteState, "state became non-finite at t=" + std::to_string(next.t));
  return next;
}

bool detect_completion(const Matrix& x, const Region& region) {
  for (int i = 0; i < x.rows(); ++i) {
    if (!region_contains(region, x.row(i).transpose())) return false;
  }
  return true;
}

int achieved_qos(double completion, const TaskSpec& task) {
  if (completion > task.deadline) return 0;
  for (int k = 1; k < task.levels(); ++k) {
    if (completion > task.boundaries[static_cast<std::size_t>(k)]) return k;
  }
  return task.levels() - 1;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "Completed";
    case RunStatus::BoundViolation: return "BoundViolation";
    case RunStatus::DeadlinePassed: return "DeadlinePassed";
    case RunStatus::NonFiniteState: return "NonFiniteState";
  }
  return "Unknown";
}

Sample make_sample(const TaskController& c, const AgentState& state, int segment) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Sample s;
  s.t = state.t;
  s.segment = segment;
  s.x = state.x;
  s.v = state.v;
  s.u = control_input(c, state.x, state.v, state.t);
  const int n_agents = state.agent_count();
  s.xi_track = Vector::Constant(n_agents, nan);
  s.lower = Vector::Constant(n_agents, nan);
  s.upper = Vector::Constant(n_agents, nan);
  const auto m = static_cast<Eigen::Index>(c.edges.size());
  s.edge_dist.resize(m);
  s.xi_edge = Vector::Constant(m, nan);
  s.gamma = Vector::Constant(m, nan);
  for (Eigen::Index e = 0; e < m; ++e) {
    const Edge& edge = c.edges[static_cast<std::size_t>(e)].edge;
    s.edge_dist(e) = (state.x.row(edge.i) - state.x.row(edge.j)).norm();
  }
  if (c.kind == ControlCase::Idle) return s;

  const NormalizedErrors xi = compute_normalized_errors(c, state.x, state.t);
  for (std::size_t slot = 0; slot < c.tracking.size(); ++slot) {
    const int i = c.tracking[slot].agent;
    const FunnelBounds b = tracking_bounds(c, slot, state.t);
    s.xi_track(i) = xi.tracking[slot];
    s.lower(i) = b.lower;
    s.upper(i) = b.upper;
  }
  for (Eigen::Index e = 0; e < m; ++e) {
    s.xi_edge(e) = xi.edge[static_cast<std::size_t>(e)];
    s.gamma(e) = edge_bound(c, static_cast<std::size_t>(e), state.t);
  }
  return s;
}

namespace {

double max_row_norm(const Matrix& u) {
  double out = 0.0;
  for (int i = 0; i < u.rows(); ++i) out = std::max(out, u.row(i).norm());
  return out;
}

}  // namespace

TaskRun run_task(const AgentState& state, const TaskController& controller, const SimConfig& config,
                 int segment) {
  if (!(config.dt > 0.0)) throw Error(ErrorCode::InvalidScenario, "dt must be positive");
  TaskRun run;
  run.final_state = state;
  const Region& target = controller.window.target;
  if (detect_completion(state.x, target)) {
    run.completion = state.t;
    return run;
  }

  const ControlLaw law = [&controller](const Matrix& x, const Matrix& v, double t) {
    return control_input(controller, x, v, t);
  };
  const double t_start = state.t;
  const double give_up = controller.window.upper * config.deadline_guard;
  AgentState current = state;
  long step = 0;
  try {
    while (true) {
      Sample sample = make_sample(controller, current, segment);
      run.max_input = std::max(run.max_input, max_row_norm(sample.u));
      run.samples.push_back(std::move(sample));

      ++step;
      const double t_next = t_start + static_cast<double>(step) * config.dt;
      AgentState next = rk4_step(current, t_next - current.t, law);
      next.t = t_next;
      if (detect_completion(next.x, target)) {
        if (config.refine_events) {
          double lo = 0.0;
          double hi = t_next - current.t;
          while (hi - lo > config.event_tolerance) {
            const double mid = 0.5 * (lo + hi);
            if (detect_completion(rk4_step(current, mid, law).x, target)) {
              hi = mid;
            } else {
              lo = mid;
            }
          }
          next = rk4_step(current, hi, law);
        }
        normalized_errors(controller, next.x, next.t);
        run.completion = next.t;
        run.final_state = std::move(next);
        return run;
      }
      if (next.t > give_up) {
        run.status = RunStatus::DeadlinePassed;
        run.final_state = std::move(next);
        run.message = "task " + std::to_string(controller.window.task) + " not completed by t=" +
                      std::to_string(run.final_state.t) + " (window closes at " +
                      std::to_string(controller.window.upper) + ")";
        return run;
      }
      current = std::move(next);
    }
  } catch (const Error& err) {
    run.final_state = current;
    run.message = err.what();
    if (err.code() == ErrorCode::BoundViolation || err.code() == ErrorCode::DomainError) {
      run.status = RunStatus::BoundViolation;
    } else if (err.code() == ErrorCode::NonFiniteState) {
      run.status = RunStatus::NonFiniteState;
    } else {
      throw;
    }
  }
  return run;
}

MissionTrace run_mission(const Scenario& scenario, const Schedule& schedule, const SimConfig& config) {
  if (!(config.dt > 0.0)) throw Error(ErrorCode::InvalidScenario, "dt must be positive");
  MissionTrace trace;
  trace.config = config;
  trace.achieved.assign(scenario.tasks.size(), 0);

  AgentState state = scenario.initial;
  state.t = 0.0;
  for (int id : schedule.executed()) {
    const TaskSpec& task = scenario.task(id);
    const int qos = schedule.qos_of(id);
    TaskWindow window;
    window.task = id;
    window.start = state.t;
    window.lower = task.boundaries[static_cast<std::size_t>(qos)];
    window.upper = task.boundaries[static_cast<std::size_t>(qos - 1)];
    window.target = task.region;

    ExecutionRecord record;
    record.task = id;
    record.start = state.t;
    record.lower = window.lower;
    record.upper = window.upper;
    record.kind = classify_case(state.t, window.lower);
    record.assigned_qos = qos;

    const auto fail = [&](RunStatus status, const std::string& message) {
      trace.executions.push_back(record);
      trace.status = status;
      trace.failed_task = id;
      trace.failure_time = state.t;
      trace.message = message;
    };
    if (!(window.upper > state.t)) {
      fail(RunStatus::DeadlinePassed, "task " + std::to_string(id) + " starts at t=" + std::to_string(state.t) +
                                          " after its window closed at " + std::to_string(window.upper));
      return trace;
    }
    TaskController controller;
    try {
      controller = synthesize(state, window, scenario, config.synthesis);
    } catch (const Error& err) {
      fail(RunStatus::BoundViolation, err.what());
      return trace;
    }

    const int segment = static_cast<int>(trace.executions.size());
    TaskRun run = run_task(state, controller, config, segment);
    for (auto& s : run.samples) trace.samples.push_back(std::move(s));
    record.max_input = run.max_input;
    if (run.status != RunStatus::Completed) {
      state = run.final_state;
      fail(run.status, run.message);
      trace.failure_time = run.final_state.t;
      return trace;
    }
    record.completion = run.completion;
    record.achieved_qos = achieved_qos(*run.completion, task);
    trace.achieved[static_cast<std::size_t>(id - 1)] = record.achieved_qos;
    trace.executions.push_back(record);
    state = run.final_state;
  }

  // Idle settle phase.
  const TaskController idle = make_idle_controller(scenario, config.synthesis.idle_kp, config.synthesis.idle_kv);
  const ControlLaw law = [&idle](const Matrix& x, const Matrix& v, double t) {
    return control_input(idle, x, v, t);
  };
  const double t_start = state.t;
  const auto steps = static_cast<long>(std::ceil(config.settle_horizon / config.dt - 1e-9));
  trace.samples.push_back(make_sample(idle, state, -1));
  for (long k = 1; k <= steps; ++k) {
    const double t_next = std::min(t_start + static_cast<double>(k) * config.dt, t_start + config.settle_horizon);
    state = rk4_step(state, t_next - state.t, law);
    state.t = t_next;
    trace.samples.push_back(make_sample(idle, state, -1));
  }
  trace.status = RunStatus::Completed;
  return trace;
}

void randomize_initial_positions(ScenarioDescription& description, const Vector& lower, const Vector& upper,
                                 std::uint64_t seed) {
  if (lower.size() != description.dimension || upper.size() != description.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "initial box must match the scenario dimension");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxAttempts = 10000;
  for (auto& p : description.positions) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      p.resize(description.dimension);
      for (int d = 0; d < description.dimension; ++d) p(d) = lower(d) + (upper(d) - lower(d)) * unit(rng);
      placed = std::none_of(description.tasks.begin(), description.tasks.end(), [&](const TaskSpec& task) {
        return task.region.center.size() == p.size() && (p - task.region.center).norm() <= task.region.radius;
      });
    }
    if (!placed) throw Error(ErrorCode::InvalidScenario, "initial box lies inside the target regions");
  }
}

}  // namespace qosppc
