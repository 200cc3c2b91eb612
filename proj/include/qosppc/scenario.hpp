#pragma once

// Domain types for agents, communication graph, tasks and scenarios.
//
// Conventions: agents are 0-based row indices into the state matrices; task
// ids are 1-based labels (tasks[l - 1].id == l). File formats use 1-based
// numbering for both.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace qosppc {

using Vector = Eigen::VectorXd;
/// One row per agent, one column per spatial dimension.
using Matrix = Eigen::MatrixXd;

/// Closed ball B(center, radius).
struct Region {
  Vector center;
  double radius = 0.0;
};

/// True iff ||point - center|| <= radius. Throws DimensionMismatch.
bool region_contains(const Region& region, const Vector& point);

struct TaskSpec {
  int id = 0;
  Region region;
  double deadline = 0.0;
  /// QoS boundary times, descending: boundaries[0] == deadline,
  /// boundaries.back() == 0. Level k >= 1 is the interval
  /// (boundaries[k], boundaries[k - 1]].
  std::vector<double> boundaries;
  /// rewards[0] is the (negative) rejection penalty.
  std::vector<double> rewards;

  int levels() const noexcept { return static_cast<int>(rewards.size()); }
};

struct Edge {
  int i = 0;
  int j = 0;
};

/// Undirected graph; each edge is stored once with i < j.
class CommGraph {
 public:
  CommGraph() = default;
  /// Stores the edges normalized to i < j. Throws IndexOutOfRange for
  /// out-of-range endpoints and InvalidScenario for self-loops.
  CommGraph(int node_count, const std::vector<Edge>& edges);

  int node_count() const noexcept { return node_count_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Sorted neighbor indices of node i. Throws IndexOutOfRange.
  const std::vector<int>& neighbors(int i) const;

  /// Breadth-first reachability from node 0.
  bool connected() const;

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

struct AgentState {
  Matrix x;
  Matrix v;
  double t = 0.0;

  int agent_count() const noexcept { return static_cast<int>(x.rows()); }
  int dimension() const noexcept { return static_cast<int>(x.cols()); }
  bool finite() const noexcept { return x.allFinite() && v.allFinite() && std::isfinite(t); }
};

/// Unvalidated scenario input as read from a document.
struct ScenarioDescription {
  int dimension = 0;
  std::vector<Vector> positions;
  std::vector<Vector> velocities;
  /// 0-based endpoints.
  std::vector<std::pair<int, int>> edges;
  /// 0-based agent indices.
  std::vector<int> active;
  double r_min = 0.0;
  double r_max = 0.0;
  double alpha = 0.0;
  std::vector<TaskSpec> tasks;
};

struct Scenario {
  CommGraph graph;
  int dimension = 0;
  AgentState initial;
  std::vector<int> active;
  std::vector<int> passive;
  std::vector<bool> is_active;
  std::vector<TaskSpec> tasks;
  double alpha = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;

  int agent_count() const noexcept { return graph.node_count(); }
  int task_count() const noexcept { return static_cast<int>(tasks.size()); }
  /// Throws IndexOutOfRange for an unknown id.
  const TaskSpec& task(int id) const;
};

/// Checks every standing assumption and returns the validated scenario.
/// Throws ValidationError listing all violations found.
Scenario validate_scenario(const ScenarioDescription& description);

}  // namespace qosppc
