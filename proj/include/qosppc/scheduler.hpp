#pragma once

// Exact ordering and QoS assignment for a deadline-constrained task set,
// maximizing alpha * reward - (1 - alpha) * travel cost.

#include "qosppc/scenario.hpp"

#include <span>
#include <vector>

namespace qosppc {

struct SchedulerConfig {
  double alpha = 0.8;
  /// Charge the leg from the initial configuration to the first executed task.
  bool include_initial_leg = true;
};

/// `qos` and `ee` are indexed by task id - 1. `order` lists task ids and may
/// contain rejected tasks (QoS 0); those keep their place in the completion
/// ordering but are never visited.
struct Schedule {
  std::vector<int> order;
  std::vector<int> qos;
  std::vector<double> ee;
  double epsilon = 1.0;
  double reward = 0.0;
  double cost = 0.0;
  double objective = 0.0;

  int qos_of(int task_id) const { return qos.at(static_cast<std::size_t>(task_id - 1)); }
  double ee_of(int task_id) const { return ee.at(static_cast<std::size_t>(task_id - 1)); }
  /// Task ids with QoS >= 1, in execution order.
  std::vector<int> executed() const;
};

/// Smallest separation between boundary times of two different tasks
/// (excluding each task's terminal zero). Falls back to the smallest gap
/// inside one task, then to 1. Throws EmptyTaskSet.
double compute_epsilon(std::span<const TaskSpec> tasks);

/// D + epsilon for QoS 0, otherwise the closing boundary of the level.
/// Throws QosOutOfRange.
double estimated_completion(const TaskSpec& task, int qos, double epsilon);

/// N * ||c_from - c_to||.
double transition_cost(const Region& from, const Region& to, int agent_count);
/// Sum over agents of ||x_i(0) - c_to||.
double initial_transition_cost(const Scenario& scenario, const Region& to);

/// Travel cost along the executed (QoS >= 1) tasks of `order`.
double path_cost(std::span<const int> order, std::span<const int> qos, const Scenario& scenario,
                 const SchedulerConfig& config);
/// Same, treating every task in `order` as executed.
double path_cost(std::span<const int> order, const Scenario& scenario, const SchedulerConfig& config);

/// Sum of R_l[qos_l] over all tasks. Throws QosOutOfRange.
double path_reward(std::span<const int> qos, std::span<const TaskSpec> tasks);

double objective_value(const Schedule& schedule, const Scenario& scenario, const SchedulerConfig& config);

/// Estimated completion times strictly increasing along the order.
bool check_feasible(const Schedule& schedule);

/// Fills ee, reward, cost and objective for the given order and QoS vector.
Schedule make_schedule(std::vector<int> order, std::vector<int> qos, double epsilon, const Scenario& scenario,
                       const SchedulerConfig& config);

/// Branch-and-bound global maximizer. Ties go to the lexicographically
/// smallest order, then the lexicographically smallest QoS vector (by task id).
/// Throws InfeasibleInstance if no ordering satisfies the completion-time
/// chain (possible only with coinciding deadlines).
Schedule solve_exact(const Scenario& scenario, const SchedulerConfig& config);

/// Plain enumeration of every permutation and QoS vector; M <= 8.
/// Throws InstanceTooLarge.
Schedule brute_force_oracle(const Scenario& scenario, const SchedulerConfig& config);

inline constexpr int kMaxOracleTasks = 8;

}  // namespace qosppc
