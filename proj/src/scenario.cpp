#include "qosppc/scenario.hpp"

#include "qosppc/errors.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>

namespace qosppc {

bool region_contains(const Region& region, const Vector& point) {
  if (point.size() != region.center.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "point has dimension " + std::to_string(point.size()) + ", region has " +
                    std::to_string(region.center.size()));
  }
  return (point - region.center).norm() <= region.radius;
}

CommGraph::CommGraph(int node_count, const std::vector<Edge>& edges)
    : node_count_(node_count), adjacency_(static_cast<std::size_t>(std::max(node_count, 0))) {
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= node_count || e.j >= node_count) {
      throw Error(ErrorCode::IndexOutOfRange, "edge (" + std::to_string(e.i) + ", " +
                                                  std::to_string(e.j) + ") outside 0.." +
                                                  std::to_string(node_count - 1));
    }
    if (e.i == e.j) {
      throw Error(ErrorCode::InvalidScenario, "self-loop at node " + std::to_string(e.i));
    }
    edges_.push_back({std::min(e.i, e.j), std::max(e.i, e.j)});
    adjacency_[e.i].push_back(e.j);
    adjacency_[e.j].push_back(e.i);
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end());
  }
}

const std::vector<int>& CommGraph::neighbors(int i) const {
  if (i < 0 || i >= node_count_) {
    throw Error(ErrorCode::IndexOutOfRange,
                "node " + std::to_string(i) + " outside 0.." + std::to_string(node_count_ - 1));
  }
  return adjacency_[static_cast<std::size_t>(i)];
}

bool CommGraph::connected() const {
  if (node_count_ <= 1) return node_count_ == 1;
  std::vector<bool> seen(static_cast<std::size_t>(node_count_), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int node = frontier.front();
    frontier.pop();
    for (int next : adjacency_[static_cast<std::size_t>(node)]) {
      if (!seen[static_cast<std::size_t>(next)]) {
        seen[static_cast<std::size_t>(next)] = true;
        ++reached;
        frontier.push(next);
      }
    }
  }
  return reached == node_count_;
}

const TaskSpec& Scenario::task(int id) const {
  if (id < 1 || id > task_count()) {
    throw Error(ErrorCode::IndexOutOfRange, "unknown task id " + std::to_string(id));
  }
  return tasks[static_cast<std::size_t>(id - 1)];
}

namespace {

std::string task_label(int l) { return "task " + std::to_string(l); }

void check_task(const TaskSpec& task, int l, const ScenarioDescription& d,
                std::vector<Violation>& out) {
  const std::string label = task_label(l);
  if (task.region.center.size() != d.dimension || !task.region.center.allFinite()) {
    out.push_back({ErrorCode::DimensionMismatch, label + ": center must be a finite vector of dimension " +
                                                     std::to_string(d.dimension)});
  }
  if (!(task.region.radius > 0.0)) {
    out.push_back({ErrorCode::InvalidScenario, label + ": radius must be positive"});
  } else if (task.region.radius < d.r_min || task.region.radius > d.r_max) {
    out.push_back({ErrorCode::InvalidScenario, label + ": radius outside [r_min, r_max]"});
  }
  if (!(task.deadline > 0.0) || !std::isfinite(task.deadline)) {
    out.push_back({ErrorCode::MalformedBoundaries, label + ": deadline must be positive"});
  }

  const auto& b = task.boundaries;
  if (b.size() < 2) {
    out.push_back({ErrorCode::MalformedBoundaries, label + ": at least two boundaries required"});
  } else {
    if (b.front() != task.deadline) {
      out.push_back({ErrorCode::MalformedBoundaries, label + ": first boundary must equal the deadline"});
    }
    if (b.back() != 0.0) {
      out.push_back({ErrorCode::MalformedBoundaries, label + ": last boundary must be 0"});
    }
    for (std::size_t k = 1; k < b.size(); ++k) {
      if (!(b[k] < b[k - 1])) {
        out.push_back({ErrorCode::MalformedBoundaries,
                       label + ": boundaries not strictly decreasing at position " + std::to_string(k)});
        break;
      }
    }
  }
  if (task.rewards.size() != b.size()) {
    out.push_back({ErrorCode::MalformedBoundaries,
                   label + ": rewards must have one entry per QoS level (" + std::to_string(b.size()) + ")"});
  }
  if (!task.rewards.empty() && !(task.rewards.front() < 0.0)) {
    out.push_back({ErrorCode::BadRejectionPenalty, label + ": rejection penalty R[0] must be negative"});
  }
}

}  // namespace

Scenario validate_scenario(const ScenarioDescription& d) {
  std::vector<Violation> out;
  const int n_agents = static_cast<int>(d.positions.size());

  if (d.dimension < 1) {
    out.push_back({ErrorCode::InvalidScenario, "dimension must be at least 1"});
  }
  if (n_agents < 1) {
    out.push_back({ErrorCode::InvalidScenario, "at least one agent required"});
  }
  if (d.velocities.size() != d.positions.size()) {
    out.push_back({ErrorCode::InvalidScenario, "one velocity per agent required"});
  }
  for (int i = 0; i < n_agents; ++i) {
    const auto& p = d.positions[static_cast<std::size_t>(i)];
    if (p.size() != d.dimension || !p.allFinite()) {
      out.push_back({ErrorCode::DimensionMismatch, "agent " + std::to_string(i + 1) + ": bad position"});
    }
    if (static_cast<std::size_t>(i) < d.velocities.size()) {
      const auto& v = d.velocities[static_cast<std::size_t>(i)];
      if (v.size() != d.dimension || !v.allFinite()) {
        out.push_back({ErrorCode::DimensionMismatch, "agent " + std::to_string(i + 1) + ": bad velocity"});
      }
    }
  }

  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen_edges;
  bool edges_ok = true;
  for (const auto& [a, b] : d.edges) {
    if (a < 0 || b < 0 || a >= n_agents || b >= n_agents) {
      out.push_back({ErrorCode::IndexOutOfRange, "edge (" + std::to_string(a + 1) + ", " +
                                                     std::to_string(b + 1) + ") references an unknown agent"});
      edges_ok = false;
      continue;
    }
    if (a == b) {
      out.push_back({ErrorCode::InvalidScenario, "self-loop at agent " + std::to_string(a + 1)});
      edges_ok = false;
      continue;
    }
    if (!seen_edges.insert({std::min(a, b), std::max(a, b)}).second) {
      out.push_back({ErrorCode::InvalidScenario, "duplicate edge (" + std::to_string(a + 1) + ", " +
                                                     std::to_string(b + 1) + ")"});
      continue;
    }
    edges.push_back({a, b});
  }
  CommGraph graph;
  if (n_agents >= 1 && edges_ok) {
    graph = CommGraph(n_agents, edges);
    if (!graph.connected()) {
      out.push_back({ErrorCode::DisconnectedGraph, "communication graph is not connected"});
    }
  }

  std::vector<bool> is_active(static_cast<std::size_t>(std::max(n_agents, 0)), false);
  if (d.active.empty()) {
    out.push_back({ErrorCode::InvalidScenario, "active agent set must be nonempty"});
  }
  for (int i : d.active) {
    if (i < 0 || i >= n_agents) {
      out.push_back({ErrorCode::IndexOutOfRange, "active agent " + std::to_string(i + 1) + " unknown"});
    } else if (is_active[static_cast<std::size_t>(i)]) {
      out.push_back({ErrorCode::InvalidScenario, "active agent " + std::to_string(i + 1) + " listed twice"});
    } else {
      is_active[static_cast<std::size_t>(i)] = true;
    }
  }

  if (!(d.alpha >= 0.0 && d.alpha <= 1.0)) {
    out.push_back({ErrorCode::InvalidScenario, "alpha must lie in [0, 1]"});
  }
  if (!(d.r_min > 0.0 && d.r_min < d.r_max) || !std::isfinite(d.r_max)) {
    out.push_back({ErrorCode::InvalidScenario, "require 0 < r_min < r_max"});
  }

  for (std::size_t l = 0; l < d.tasks.size(); ++l) {
    check_task(d.tasks[l], static_cast<int>(l + 1), d, out);
  }

  // Disjointness of target regions (set index 0 is the initial-position set).
  const auto dims_ok = [&](const Vector& a) { return a.size() == d.dimension; };
  for (std::size_t a = 0; a < d.tasks.size(); ++a) {
    const Region& ra = d.tasks[a].region;
    if (!dims_ok(ra.center)) continue;
    for (std::size_t b = a + 1; b < d.tasks.size(); ++b) {
      const Region& rb = d.tasks[b].region;
      if (!dims_ok(rb.center)) continue;
      if (!((ra.center - rb.center).norm() > ra.radius + rb.radius)) {
        out.push_back({ErrorCode::DisjointnessViolation, "sets " + std::to_string(a + 1) + " and " +
                                                             std::to_string(b + 1) + " intersect"});
      }
    }
    for (int i = 0; i < n_agents; ++i) {
      const auto& p = d.positions[static_cast<std::size_t>(i)];
      if (!dims_ok(p)) continue;
      if ((p - ra.center).norm() <= ra.radius) {
        out.push_back({ErrorCode::DisjointnessViolation,
                       "sets 0 and " + std::to_string(a + 1) + " intersect (agent " + std::to_string(i + 1) +
                           " starts inside)"});
      }
    }
  }

  if (!out.empty()) throw ValidationError(std::move(out));

  Scenario s;
  s.graph = std::move(graph);
  s.dimension = d.dimension;
  s.initial.x.resize(n_agents, d.dimension);
  s.initial.v.resize(n_agents, d.dimension);
  for (int i = 0; i < n_agents; ++i) {
    s.initial.x.row(i) = d.positions[static_cast<std::size_t>(i)].transpose();
    s.initial.v.row(i) = d.velocities[static_cast<std::size_t>(i)].transpose();
  }
  s.initial.t = 0.0;
  s.is_active = is_active;
  for (int i = 0; i < n_agents; ++i) {
    (is_active[static_cast<std::size_t>(i)] ? s.active : s.passive).push_back(i);
  }
  s.tasks = d.tasks;
  for (std::size_t l = 0; l < s.tasks.size(); ++l) s.tasks[l].id = static_cast<int>(l + 1);
  s.alpha = d.alpha;
  s.r_min = d.r_min;
  s.r_max = d.r_max;
  return s;
}

}  // namespace qosppc
