#include "qosppc/scheduler.hpp"

#include "qosppc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace qosppc {

std::vector<int> Schedule::executed() const {
  std::vector<int> out;
  for (int id : order) {
    if (qos_of(id) >= 1) out.push_back(id);
  }
  return out;
}

double compute_epsilon(std::span<const TaskSpec> tasks) {
  if (tasks.empty()) throw Error(ErrorCode::EmptyTaskSet, "epsilon needs at least one task");

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < tasks.size(); ++a) {
    for (std::size_t b = a + 1; b < tasks.size(); ++b) {
      const auto& ba = tasks[a].boundaries;
      const auto& bb = tasks[b].boundaries;
      for (std::size_t p = 0; p + 1 < ba.size(); ++p) {
        for (std::size_t q = 0; q + 1 < bb.size(); ++q) {
          if (ba[p] != bb[q]) best = std::min(best, std::abs(ba[p] - bb[q]));
        }
      }
    }
  }
  if (std::isfinite(best)) return best;

  for (const auto& task : tasks) {
    const auto& b = task.boundaries;
    for (std::size_t p = 0; p < b.size(); ++p) {
      for (std::size_t q = p + 1; q < b.size(); ++q) {
        const double gap = std::abs(b[p] - b[q]);
        if (gap > 0.0) best = std::min(best, gap);
      }
    }
  }
  return std::isfinite(best) ? best : 1.0;
}

double estimated_completion(const TaskSpec& task, int qos, double epsilon) {
  if (qos < 0 || qos >= task.levels()) {
    throw Error(ErrorCode::QosOutOfRange, "task " + std::to_string(task.id) + " has no QoS level " +
                                              std::to_string(qos));
  }
  if (qos == 0) return task.deadline + epsilon;
  return task.boundaries[static_cast<std::size_t>(qos - 1)];
}

double transition_cost(const Region& from, const Region& to, int agent_count) {
  return agent_count * (from.center - to.center).norm();
}

double initial_transition_cost(const Scenario& scenario, const Region& to) {
  double total = 0.0;
  for (int i = 0; i < scenario.agent_count(); ++i) {
    total += (scenario.initial.x.row(i).transpose() - to.center).norm();
  }
  return total;
}

double path_cost(std::span<const int> order, std::span<const int> qos, const Scenario& scenario,
                 const SchedulerConfig& config) {
  double total = 0.0;
  const Region* previous = nullptr;
  for (int id : order) {
    if (!qos.empty() && qos[static_cast<std::size_t>(id - 1)] == 0) continue;
    const Region& region = scenario.task(id).region;
    if (previous == nullptr) {
      if (config.include_initial_leg) total += initial_transition_cost(scenario, region);
    } else {
      total += transition_cost(*previous, region, scenario.agent_count());
    }
    previous = &region;
  }
  return total;
}

double path_cost(std::span<const int> order, const Scenario& scenario, const SchedulerConfig& config) {
  return path_cost(order, std::span<const int>{}, scenario, config);
}

double path_reward(std::span<const int> qos, std::span<const TaskSpec> tasks) {
  if (qos.size() != tasks.size()) {
    throw Error(ErrorCode::QosOutOfRange, "every task needs a QoS level");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < tasks.size(); ++l) {
    const int k = qos[l];
    if (k < 0 || k >= tasks[l].levels()) {
      throw Error(ErrorCode::QosOutOfRange, "task " + std::to_string(l + 1) + " has no QoS level " +
                                                std::to_string(k));
    }
    total += tasks[l].rewards[static_cast<std::size_t>(k)];
  }
  return total;
}

double objective_value(const Schedule& schedule, const Scenario& scenario, const SchedulerConfig& config) {
  const double reward = path_reward(schedule.qos, scenario.tasks);
  const double cost = path_cost(schedule.order, schedule.qos, scenario, config);
  return config.alpha * reward - (1.0 - config.alpha) * cost;
}

bool check_feasible(const Schedule& schedule) {
  for (std::size_t p = 1; p < schedule.order.size(); ++p) {
    if (!(schedule.ee_of(schedule.order[p]) > schedule.ee_of(schedule.order[p - 1]))) return false;
  }
  return true;
}

Schedule make_schedule(std::vector<int> order, std::vector<int> qos, double epsilon, const Scenario& scenario,
                       const SchedulerConfig& config) {
  Schedule s;
  s.order = std::move(order);
  s.qos = std::move(qos);
  s.epsilon = epsilon;
  s.ee.resize(scenario.tasks.size());
  for (const auto& task : scenario.tasks) {
    s.ee[static_cast<std::size_t>(task.id - 1)] =
        estimated_completion(task, s.qos[static_cast<std::size_t>(task.id - 1)], epsilon);
  }
  s.reward = path_reward(s.qos, scenario.tasks);
  s.cost = path_cost(s.order, s.qos, scenario, config);
  s.objective = config.alpha * s.reward - (1.0 - config.alpha) * s.cost;
  return s;
}

namespace {

void check_alpha(const SchedulerConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidScenario, "alpha must lie in [0, 1]");
  }
}

// Incumbent with the deterministic tie-break.
struct Incumbent {
  std::optional<Schedule> best;

  void offer(const std::vector<int>& order, const std::vector<int>& qos, double epsilon, const Scenario& scenario,
             const SchedulerConfig& config) {
    Schedule cand = make_schedule(order, qos, epsilon, scenario, config);
    if (!best) {
      best = std::move(cand);
      return;
    }
    if (cand.objective > best->objective ||
        (cand.objective == best->objective &&
         (cand.order < best->order || (cand.order == best->order && cand.qos < best->qos)))) {
      best = std::move(cand);
    }
  }

  double value() const {
    return best ? best->objective : -std::numeric_limits<double>::infinity();
  }
};

Schedule empty_schedule() {
  Schedule s;
  s.epsilon = 1.0;
  return s;
}

class BranchAndBound {
 public:
  BranchAndBound(const Scenario& scenario, const SchedulerConfig& config)
      : scenario_(scenario), config_(config), m_(scenario.task_count()),
        epsilon_(compute_epsilon(scenario.tasks)), used_(static_cast<std::size_t>(m_), false),
        qos_(static_cast<std::size_t>(m_), 0) {
    best_reward_.resize(static_cast<std::size_t>(m_));
    for (int l = 0; l < m_; ++l) {
      const auto& r = scenario.tasks[static_cast<std::size_t>(l)].rewards;
      best_reward_[static_cast<std::size_t>(l)] = *std::max_element(r.begin(), r.end());
    }
    remaining_best_ = std::accumulate(best_reward_.begin(), best_reward_.end(), 0.0);
    order_.reserve(static_cast<std::size_t>(m_));
  }

  Schedule run() {
    descend(-std::numeric_limits<double>::infinity(), 0.0, 0.0, nullptr);
    if (!incumbent_.best) {
      throw Error(ErrorCode::InfeasibleInstance, "no ordering satisfies the completion-time constraints");
    }
    return *incumbent_.best;
  }

 private:
  void descend(double last_ee, double reward, double cost, const Region* last_region) {
    if (static_cast<int>(order_.size()) == m_) {
      incumbent_.offer(order_, qos_, epsilon_, scenario_, config_);
      return;
    }
    // Admissible: best remaining rewards, no further travel.
    const double bound = config_.alpha * (reward + remaining_best_) - (1.0 - config_.alpha) * cost;
    const double incumbent = incumbent_.value();
    if (bound < incumbent - 1e-9 * (1.0 + std::abs(incumbent))) return;

    for (int l = 0; l < m_; ++l) {
      if (used_[static_cast<std::size_t>(l)]) continue;
      const TaskSpec& task = scenario_.tasks[static_cast<std::size_t>(l)];
      used_[static_cast<std::size_t>(l)] = true;
      order_.push_back(task.id);
      remaining_best_ -= best_reward_[static_cast<std::size_t>(l)];
      for (int k = 0; k < task.levels(); ++k) {
        const double ee = estimated_completion(task, k, epsilon_);
        if (!(ee > last_ee)) continue;
        qos_[static_cast<std::size_t>(l)] = k;
        double next_cost = cost;
        const Region* next_region = last_region;
        if (k >= 1) {
          if (last_region == nullptr) {
            if (config_.include_initial_leg) next_cost += initial_transition_cost(scenario_, task.region);
          } else {
            next_cost += transition_cost(*last_region, task.region, scenario_.agent_count());
          }
          next_region = &task.region;
        }
        descend(ee, reward + task.rewards[static_cast<std::size_t>(k)], next_cost, next_region);
      }
      qos_[static_cast<std::size_t>(l)] = 0;
      remaining_best_ += best_reward_[static_cast<std::size_t>(l)];
      order_.pop_back();
      used_[static_cast<std::size_t>(l)] = false;
    }
  }

  const Scenario& scenario_;
  const SchedulerConfig& config_;
  int m_;
  double epsilon_;
  std::vector<bool> used_;
  std::vector<int> qos_;
  std::vector<int> order_;
  std::vector<double> best_reward_;
  double remaining_best_ = 0.0;
  Incumbent incumbent_;
};

}  // namespace

Schedule solve_exact(const Scenario& scenario, const SchedulerConfig& config) {
  check_alpha(config);
  if (scenario.tasks.empty()) return empty_schedule();
  return BranchAndBound(scenario, config).run();
}

Schedule brute_force_oracle(const Scenario& scenario, const SchedulerConfig& config) {
  check_alpha(config);
  const int m = scenario.task_count();
  if (m > kMaxOracleTasks) {
    throw Error(ErrorCode::InstanceTooLarge, std::to_string(m) + " tasks exceed the oracle limit of " +
                                                 std::to_string(kMaxOracleTasks));
  }
  if (m == 0) return empty_schedule();

  const double epsilon = compute_epsilon(scenario.tasks);
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 1);
  Incumbent incumbent;
  do {
    std::vector<int> qos(static_cast<std::size_t>(m), 0);
    while (true) {
      bool feasible = true;
      double last = -std::numeric_limits<double>::infinity();
      for (int id : order) {
        const double ee = estimated_completion(scenario.task(id), qos[static_cast<std::size_t>(id - 1)], epsilon);
        if (!(ee > last)) {
          feasible = false;
          break;
        }
        last = ee;
      }
      if (feasible) incumbent.offer(order, qos, epsilon, scenario, config);

      // Odometer, last task id fastest.
      int pos = m - 1;
      while (pos >= 0) {
        auto& digit = qos[static_cast<std::size_t>(pos)];
        if (++digit < scenario.tasks[static_cast<std::size_t>(pos)].levels()) break;
        digit = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  } while (std::next_permutation(order.begin(), order.end()));

  if (!incumbent.best) {
    throw Error(ErrorCode::InfeasibleInstance, "no ordering satisfies the completion-time constraints");
  }
  return *incumbent.best;
}

}  // namespace qosppc
