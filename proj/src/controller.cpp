#include "qosppc/controller.hpp"

#include "qosppc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qosppc {

const char* to_string(ControlCase kind) {
  switch (kind) {
    case ControlCase::CaseI: return "CaseI";
    case ControlCase::CaseII: return "CaseII";
    case ControlCase::Idle: return "Idle";
  }
  return "Unknown";
}

double TaskController::max_rate() const {
  double rate = 0.0;
  for (const auto& f : tracking) rate = std::max({rate, f.kappa1, f.kappa2, f.kappa3});
  for (const auto& e : edges) rate = std::max({rate, e.mu1, e.kappa2, e.mu2});
  return rate;
}

ControlCase classify_case(double start, double lower) {
  return lower <= start ? ControlCase::CaseI : ControlCase::CaseII;
}

namespace {

double edge_length(const Matrix& x, const Edge& e) { return (x.row(e.i) - x.row(e.j)).norm(); }

double center_distance(const Matrix& x, int agent, const Region& target) {
  return (x.row(agent).transpose() - target.center).norm();
}

void check_state(const AgentState& state, const Scenario& scenario, const TaskWindow& window) {
  if (state.agent_count() != scenario.agent_count() || state.dimension() != scenario.dimension ||
      window.target.center.size() != scenario.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "state does not match the scenario");
  }
}

// Shared skeleton: edges with initial widths, gamma_bar and sigma.
TaskController skeleton(ControlCase kind, const AgentState& state, const TaskWindow& window,
                        const Scenario& scenario, const SynthesisParams& params) {
  TaskController c;
  c.kind = kind;
  c.window = window;
  c.window.start = state.t;
  c.agent_count = scenario.agent_count();
  c.dimension = scenario.dimension;
  c.r_min = scenario.r_min;
  c.tracking_slot.assign(static_cast<std::size_t>(c.agent_count), -1);

  const int n_minus_1 = c.agent_count - 1;
  std::vector<double> widths;
  for (const Edge& e : scenario.graph.edges()) {
    EdgeFunnel f;
    f.edge = e;
    f.gamma0 = params.margin * std::max(edge_length(state.x, e), scenario.r_min / n_minus_1);
    widths.push_back(f.gamma0);
    c.edges.push_back(f);
  }
  c.gamma_bar = select_gamma_bar(scenario, widths);
  if (params.edge_width == EdgeWidth::Uniform) {
    for (auto& f : c.edges) f.gamma0 = c.gamma_bar;
  }
  c.sigma = params.sigma_frac * scenario.r_min / (n_minus_1 * c.gamma_bar + scenario.r_min);

  for (int i : scenario.active) {
    c.tracking_slot[static_cast<std::size_t>(i)] = static_cast<int>(c.tracking.size());
    TrackingFunnel f;
    f.agent = i;
    c.tracking.push_back(f);
  }
  c.kp = params.idle_kp;
  c.kv = params.idle_kv;
  return c;
}

void assign_uniform_gains(TaskController& c, const SynthesisParams& params) {
  c.gains.assign(static_cast<std::size_t>(c.agent_count), params.gain_margin * c.max_rate());
}

}  // namespace

double select_gamma_bar(const Scenario& scenario, const std::vector<double>& edge_widths) {
  double bar = 2.0 * scenario.r_max;
  for (const Edge& e : scenario.graph.edges()) bar = std::max(bar, edge_length(scenario.initial.x, e));
  for (double w : edge_widths) bar = std::max(bar, w);
  return bar;
}

TaskController synth_case1(const AgentState& state, const TaskWindow& window, const Scenario& scenario,
                           const SynthesisParams& params) {
  check_state(state, scenario, window);
  const double t0 = state.t;
  const double span = window.upper - t0;
  if (!(span > 0.0)) {
    throw Error(ErrorCode::DegenerateWindow, "task " + std::to_string(window.task) + ": window closes at " +
                                                 std::to_string(window.upper) + " before start " +
                                                 std::to_string(t0));
  }
  TaskController c = skeleton(ControlCase::CaseI, state, window, scenario, params);
  const double r = window.target.radius;
  for (auto& f : c.tracking) {
    const double d = center_distance(state.x, f.agent, window.target);
    if (!(d > 0.0)) {
      throw Error(ErrorCode::AgentInsideTarget, "active agent " + std::to_string(f.agent + 1) +
                                                    " sits on the center of task " + std::to_string(window.task));
    }
    f.beta0 = params.margin * std::max(d, c.sigma * r);
    f.kappa1 = std::log(f.beta0 / (c.sigma * r)) / span;
  }
  const int n_minus_1 = c.agent_count - 1;
  for (auto& e : c.edges) {
    e.mu1 = std::log(n_minus_1 * e.gamma0 / ((1.0 - c.sigma) * scenario.r_min)) / span;
  }
  assign_uniform_gains(c, params);
  return c;
}

TaskController synth_case2(const AgentState& state, const TaskWindow& window, const Scenario& scenario,
                           const SynthesisParams& params) {
  check_state(state, scenario, window);
  const double t0 = state.t;
  const double approach = window.lower - t0;
  const double closing = window.upper - window.lower;
  if (!(approach > 0.0) || !(closing > 0.0)) {
    throw Error(ErrorCode::DegenerateWindow, "task " + std::to_string(window.task) +
                                                 ": need start < lower < upper, got " + std::to_string(t0) +
                                                 ", " + std::to_string(window.lower) + ", " +
                                                 std::to_string(window.upper));
  }
  TaskController c = skeleton(ControlCase::CaseII, state, window, scenario, params);
  const double r = window.target.radius;
  double kappa_edge = 0.0;
  for (auto& f : c.tracking) {
    const double d = center_distance(state.x, f.agent, window.target);
    if (!(d > r)) {
      throw Error(ErrorCode::AgentInsideTarget, "active agent " + std::to_string(f.agent + 1) +
                                                    " already inside the region of task " +
                                                    std::to_string(window.task));
    }
    f.delta = params.delta_frac * (d - r);
    f.alpha0 = d - f.delta;
    f.beta0 = d + f.delta;
    f.kappa2 = std::log(f.alpha0 / r) / approach;
    f.kappa3 = std::log(f.beta0 / (c.sigma * f.alpha0)) / closing;
    kappa_edge = std::max(kappa_edge, f.kappa2);
  }
  const int n_minus_1 = c.agent_count - 1;
  for (auto& e : c.edges) {
    e.kappa2 = kappa_edge;
    e.knot = e.gamma0 * std::exp(-kappa_edge * approach);
    e.mu2 = std::log(n_minus_1 * e.gamma0 / ((1.0 - c.sigma) * scenario.r_min)) / closing;
  }
  assign_uniform_gains(c, params);
  return c;
}

TaskController synthesize(const AgentState& state, TaskWindow window, const Scenario& scenario,
                          const SynthesisParams& params) {
  window.start = state.t;
  if (classify_case(state.t, window.lower) == ControlCase::CaseI) {
    return synth_case1(state, window, scenario, params);
  }
  return synth_case2(state, window, scenario, params);
}

TaskController make_idle_controller(const Scenario& scenario, double kp, double kv) {
  TaskController c;
  c.kind = ControlCase::Idle;
  c.agent_count = scenario.agent_count();
  c.dimension = scenario.dimension;
  c.r_min = scenario.r_min;
  c.tracking_slot.assign(static_cast<std::size_t>(c.agent_count), -1);
  for (const Edge& e : scenario.graph.edges()) {
    EdgeFunnel f;
    f.edge = e;
    c.edges.push_back(f);
  }
  c.kp = kp;
  c.kv = kv;
  return c;
}

namespace {

[[noreturn]] void reject(const std::string& what) { throw Error(ErrorCode::InvalidController, what); }

bool positive_finite(double value) { return value > 0.0 && std::isfinite(value); }

}  // namespace

void validate_controller(const TaskController& c) {
  if (c.kind == ControlCase::Idle) {
    if (!positive_finite(c.kp) || !positive_finite(c.kv)) reject("idle gains must be positive");
    return;
  }
  if (!(c.sigma > 0.0 && c.sigma < 1.0)) reject("sigma must lie in (0, 1)");
  if (c.gains.size() != static_cast<std::size_t>(c.agent_count)) reject("one velocity gain per agent required");
  const double r = c.window.target.radius;
  const int n_minus_1 = c.agent_count - 1;

  // Largest rate each agent's gain has to dominate.
  std::vector<double> needed(static_cast<std::size_t>(c.agent_count), 0.0);
  for (const auto& f : c.tracking) {
    double& need = needed[static_cast<std::size_t>(f.agent)];
    if (c.kind == ControlCase::CaseI) {
      if (!positive_finite(f.beta0) || !(f.beta0 > c.sigma * r)) reject("beta0 must exceed sigma * r");
      if (!positive_finite(f.kappa1)) reject("kappa1 must be positive");
      need = std::max(need, f.kappa1);
    } else {
      if (!(f.alpha0 > r) || !(f.beta0 > f.alpha0)) reject("need r < alpha0 < beta0");
      if (!positive_finite(f.kappa2) || !positive_finite(f.kappa3)) reject("kappa2, kappa3 must be positive");
      need = std::max({need, f.kappa2, f.kappa3});
    }
  }
  double widest = 0.0;
  for (const auto& e : c.edges) {
    if (!positive_finite(e.gamma0) || !(e.gamma0 > c.r_min / n_minus_1)) {
      reject("edge funnel width must exceed r_min / (N - 1)");
    }
    widest = std::max(widest, e.gamma0);
    double rate = 0.0;
    if (c.kind == ControlCase::CaseI) {
      if (!positive_finite(e.mu1)) reject("mu1 must be positive");
      rate = e.mu1;
    } else {
      if (!positive_finite(e.kappa2) || !positive_finite(e.mu2) || !positive_finite(e.knot)) {
        reject("edge rates must be positive");
      }
      rate = std::max(e.kappa2, e.mu2);
    }
    for (int node : {e.edge.i, e.edge.j}) {
      needed[static_cast<std::size_t>(node)] = std::max(needed[static_cast<std::size_t>(node)], rate);
    }
  }
  if (c.kind == ControlCase::CaseII) {
    if (c.gamma_bar < widest) reject("gamma_bar below the widest edge funnel");
    if (!(c.sigma <= c.r_min / (n_minus_1 * c.gamma_bar + c.r_min))) {
      reject("sigma exceeds r_min / ((N - 1) gamma_bar + r_min)");
    }
  }
  for (int i = 0; i < c.agent_count; ++i) {
    if (!(c.gains[static_cast<std::size_t>(i)] > needed[static_cast<std::size_t>(i)])) {
      reject("velocity gain of agent " + std::to_string(i + 1) + " does not dominate its funnel rates");
    }
  }
}

FunnelBounds tracking_bounds(const TaskController& c, std::size_t slot, double t) {
  const double t0 = c.window.start;
  if (t < t0) throw Error(ErrorCode::TimeBeforeStart, "funnel evaluated before its start time");
  const TrackingFunnel& f = c.tracking.at(slot);
  if (c.kind == ControlCase::CaseI) return {0.0, f.beta0 * std::exp(-f.kappa1 * (t - t0))};
  if (t <= c.window.lower) {
    const double decay = std::exp(-f.kappa2 * (t - t0));
    return {f.alpha0 * decay, f.beta0 * decay};
  }
  const double r = c.window.target.radius;
  const double decay = std::exp(-f.kappa3 * (t - c.window.lower));
  return {r * decay, f.beta0 * r / f.alpha0 * decay};
}

double edge_bound(const TaskController& c, std::size_t edge, double t) {
  const double t0 = c.window.start;
  if (t < t0) throw Error(ErrorCode::TimeBeforeStart, "funnel evaluated before its start time");
  const EdgeFunnel& e = c.edges.at(edge);
  if (c.kind == ControlCase::CaseI) return e.gamma0 * std::exp(-e.mu1 * (t - t0));
  if (t <= c.window.lower) return e.gamma0 * std::exp(-e.kappa2 * (t - t0));
  return e.knot * std::exp(-e.mu2 * (t - c.window.lower));
}

double funnel_margin(ControlCase kind, bool tracking, double xi) {
  if (tracking && kind == ControlCase::CaseII) return 1.0 - std::abs(xi);
  return 1.0 - xi;
}

NormalizedErrors compute_normalized_errors(const TaskController& c, const Matrix& x, double t) {
  NormalizedErrors out;
  if (c.kind == ControlCase::Idle) return out;
  out.tracking.reserve(c.tracking.size());
  for (std::size_t s = 0; s < c.tracking.size(); ++s) {
    const double d = center_distance(x, c.tracking[s].agent, c.window.target);
    const FunnelBounds b = tracking_bounds(c, s, t);
    if (c.kind == ControlCase::CaseI) {
      out.tracking.push_back(d / b.upper);
    } else {
      const double rho = 0.5 * (b.upper + b.lower);
      const double delta = 0.5 * (b.upper - b.lower);
      out.tracking.push_back((d - rho) / delta);
    }
  }
  out.edge.reserve(c.edges.size());
  for (std::size_t e = 0; e < c.edges.size(); ++e) {
    out.edge.push_back(edge_length(x, c.edges[e].edge) / edge_bound(c, e, t));
  }
  return out;
}

NormalizedErrors normalized_errors(const TaskController& c, const Matrix& x, double t) {
  NormalizedErrors out = compute_normalized_errors(c, x, t);
  for (std::size_t s = 0; s < out.tracking.size(); ++s) {
    const double xi = out.tracking[s];
    if (!(funnel_margin(c.kind, true, xi) > kBoundGuard) || !(xi >= 0.0 || c.kind == ControlCase::CaseII)) {
      throw Error(ErrorCode::BoundViolation, "task " + std::to_string(c.window.task) + ": agent " +
                                                 std::to_string(c.tracking[s].agent + 1) +
                                                 " left its tracking funnel at t=" + std::to_string(t) +
                                                 " (xi=" + std::to_string(xi) + ")");
    }
  }
  for (std::size_t e = 0; e < out.edge.size(); ++e) {
    if (!(funnel_margin(c.kind, false, out.edge[e]) > kBoundGuard)) {
      const Edge& edge = c.edges[e].edge;
      throw Error(ErrorCode::BoundViolation, "task " + std::to_string(c.window.task) + ": edge " +
                                                 std::to_string(edge.i + 1) + "-" + std::to_string(edge.j + 1) +
                                                 " left its funnel at t=" + std::to_string(t) +
                                                 " (xi=" + std::to_string(out.edge[e]) + ")");
    }
  }
  return out;
}

TransformValue transform(TransformKind kind, double z) {
  if (kind == TransformKind::S1) {
    if (!(z >= 0.0 && z < 1.0)) throw Error(ErrorCode::DomainError, "S1 needs z in [0, 1), got " + std::to_string(z));
    return {-std::log1p(-z), 1.0 / (1.0 - z)};
  }
  if (!(z > -1.0 && z < 1.0)) throw Error(ErrorCode::DomainError, "S2 needs z in (-1, 1), got " + std::to_string(z));
  return {std::log1p(z) - std::log1p(-z), 2.0 / (1.0 - z * z)};
}

namespace {

Vector unit_or_zero(const Vector& w) {
  const double norm = w.norm();
  if (norm < kUnitVectorFloor) return Vector::Zero(w.size());
  return w / norm;
}

Matrix idle_from_edges(const Matrix& x, const Matrix& v, double kp, double kv, const std::vector<Edge>& edges) {
  Matrix u = -kv * v;
  for (const Edge& e : edges) {
    const Eigen::RowVectorXd diff = x.row(e.i) - x.row(e.j);
    u.row(e.i) -= kp * diff;
    u.row(e.j) += kp * diff;
  }
  return u;
}

}  // namespace

Matrix idle_control(const Matrix& x, const Matrix& v, double kp, double kv, const CommGraph& graph) {
  return idle_from_edges(x, v, kp, kv, graph.edges());
}

Matrix control_input(const TaskController& c, const Matrix& x, const Matrix& v, double t) {
  if (c.kind == ControlCase::Idle) {
    std::vector<Edge> edges;
    edges.reserve(c.edges.size());
    for (const auto& e : c.edges) edges.push_back(e.edge);
    return idle_from_edges(x, v, c.kp, c.kv, edges);
  }
  const NormalizedErrors xi = normalized_errors(c, x, t);
  Matrix u(x.rows(), x.cols());
  for (int i = 0; i < c.agent_count; ++i) u.row(i) = -c.gains[static_cast<std::size_t>(i)] * v.row(i);

  for (std::size_t e = 0; e < c.edges.size(); ++e) {
    const Edge& edge = c.edges[e].edge;
    const TransformValue s = transform(TransformKind::S1, xi.edge[e]);
    const double weight = s.derivative * s.value / edge_bound(c, e, t);
    const Vector n = unit_or_zero((x.row(edge.i) - x.row(edge.j)).transpose());
    u.row(edge.i) -= weight * n.transpose();
    u.row(edge.j) += weight * n.transpose();
  }

  for (std::size_t s = 0; s < c.tracking.size(); ++s) {
    const int i = c.tracking[s].agent;
    const FunnelBounds b = tracking_bounds(c, s, t);
    double weight = 0.0;
    if (c.kind == ControlCase::CaseI) {
      const TransformValue tr = transform(TransformKind::S1, xi.tracking[s]);
      weight = tr.derivative * tr.value / b.upper;
    } else {
      const TransformValue tr = transform(TransformKind::S2, xi.tracking[s]);
      weight = tr.derivative * tr.value / (0.5 * (b.upper - b.lower));
    }
    const Vector n = unit_or_zero(x.row(i).transpose() - c.window.target.center);
    u.row(i) -= weight * n.transpose();
  }
  return u;
}

}  // namespace qosppc
