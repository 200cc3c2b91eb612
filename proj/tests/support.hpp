#pragma once

// Shared fixtures for the unit and acceptance suites.

#include "qosppc/controller.hpp"
#include "qosppc/io.hpp"
#include "qosppc/scheduler.hpp"
#include "qosppc/scenario.hpp"
#include "qosppc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace qosppc::testing {

inline std::string data_path(const std::string& name) { return std::string(QOSPPC_DATA_DIR) + "/" + name; }

inline constexpr std::uint64_t kGoldenSeed = 42;

inline ScenarioDescription golden_description(std::uint64_t seed = kGoldenSeed) {
  return load_scenario(data_path("four_agent_three_task.json"), seed);
}

inline Scenario golden_scenario(std::uint64_t seed = kGoldenSeed) { return validate_scenario(golden_description(seed)); }

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline TaskSpec make_task(int id, Vector center, double radius, std::vector<double> boundaries,
                          std::vector<double> rewards) {
  TaskSpec t;
  t.id = id;
  t.region = Region{std::move(center), radius};
  t.deadline = boundaries.front();
  t.boundaries = std::move(boundaries);
  t.rewards = std::move(rewards);
  return t;
}

enum class Topology { Line, Star };

struct RandomScenarioOptions {
  int max_agents = 6;
  int max_tasks = 3;
  int max_levels = 3;
  double min_window = 5.0;
  double min_reach = 5.0;
  double max_reach = 12.0;
  double earliest_boundary = 10.0;
  double min_deadline = 25.0;
  double max_deadline = 45.0;
};

/// Planar scenario with one active agent, a line or star graph, agents drawn
/// in [0, 2]^2 and disjoint targets kept clear of that box.
inline ScenarioDescription random_scenario(std::uint64_t seed, const RandomScenarioOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  ScenarioDescription d;
  d.dimension = 2;
  const int n = pick(2, opt.max_agents);
  d.positions.assign(static_cast<std::size_t>(n), Vector::Zero(2));
  d.velocities.assign(static_cast<std::size_t>(n), Vector::Zero(2));
  const Topology topology = pick(0, 1) == 0 ? Topology::Line : Topology::Star;
  const int hub = pick(0, n - 1);
  for (int i = 0; i < n; ++i) {
    if (topology == Topology::Line && i + 1 < n) d.edges.emplace_back(i, i + 1);
    if (topology == Topology::Star && i != hub) d.edges.emplace_back(hub, i);
  }
  d.active = {pick(0, n - 1)};
  d.alpha = 0.8;

  const int m = pick(1, opt.max_tasks);
  while (static_cast<int>(d.tasks.size()) < m) {
    const double radius = uniform(1.0, 1.5);
    const double reach = uniform(opt.min_reach, opt.max_reach);
    const double heading = uniform(0.0, 2.0 * 3.14159265358979323846);
    const Vector center = vec2(1.0 + reach * std::cos(heading), 1.0 + reach * std::sin(heading));
    if ((center - vec2(1.0, 1.0)).norm() < radius + 2.0) continue;
    const bool clear = std::all_of(d.tasks.begin(), d.tasks.end(), [&](const TaskSpec& other) {
      return (center - other.region.center).norm() > radius + other.region.radius + 1.0;
    });
    if (!clear) continue;

    const double deadline = uniform(opt.min_deadline, opt.max_deadline);
    // Keep rejection sampling of the inner boundaries cheap: allow at most
    // one inner boundary per two windows of available span.
    const double span = deadline - opt.min_window - opt.earliest_boundary;
    const int room = span < 0.0 ? 1 : static_cast<int>(std::floor(span / (2.0 * opt.min_window))) + 2;
    const int levels = pick(1, std::min(opt.max_levels, room));
    std::vector<double> inner;
    while (static_cast<int>(inner.size()) < levels - 1) {
      const double b = uniform(opt.earliest_boundary, deadline - opt.min_window);
      const bool spaced = std::all_of(inner.begin(), inner.end(),
                                      [&](double other) { return std::abs(other - b) >= opt.min_window; });
      if (spaced) inner.push_back(b);
    }
    std::sort(inner.rbegin(), inner.rend());
    std::vector<double> boundaries{deadline};
    boundaries.insert(boundaries.end(), inner.begin(), inner.end());
    boundaries.push_back(0.0);
    std::vector<double> rewards{-20.0};
    for (int k = 0; k < levels; ++k) rewards.push_back(static_cast<double>(pick(1, 10)));
    d.tasks.push_back(make_task(static_cast<int>(d.tasks.size() + 1), center, radius, boundaries, rewards));
  }
  d.r_min = 1.0;
  d.r_max = 1.5;
  randomize_initial_positions(d, vec2(0.0, 0.0), vec2(2.0, 2.0), seed);
  return d;
}

/// Line graph of planar agents with one active agent, no tasks.
inline Scenario line_scenario(const std::vector<Vector>& positions, double r_min = 1.0, double r_max = 1.5) {
  ScenarioDescription d;
  d.dimension = 2;
  d.positions = positions;
  d.velocities.assign(positions.size(), Vector::Zero(2));
  for (std::size_t i = 1; i < positions.size(); ++i) {
    d.edges.emplace_back(static_cast<int>(i - 1), static_cast<int>(i));
  }
  d.active = {0};
  d.r_min = r_min;
  d.r_max = r_max;
  d.alpha = 0.8;
  return validate_scenario(d);
}

inline AgentState state_of(const Scenario& s, double t = 0.0) {
  AgentState st = s.initial;
  st.t = t;
  return st;
}

inline TaskWindow window(double lower, double upper, Vector center, double radius) {
  TaskWindow w;
  w.task = 1;
  w.lower = lower;
  w.upper = upper;
  w.target = Region{std::move(center), radius};
  return w;
}

struct RandomDraw {
  Scenario scenario;
  AgentState state;
  TaskWindow window;
  SynthesisParams params;
};

/// Random admissible synthesis input; `case2` places the window opening in the future.
inline RandomDraw random_draw(std::mt19937_64& rng, bool case2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = std::uniform_int_distribution<int>(2, 6)(rng);
  std::vector<Vector> positions;
  for (int i = 0; i < n; ++i) positions.push_back(vec2(3.0 * u(rng), 3.0 * u(rng)));
  RandomDraw out{line_scenario(positions, 0.5 + u(rng), 2.0 + u(rng)), {}, {}, {}};
  const double t0 = 20.0 * u(rng);
  out.state = state_of(out.scenario, t0);
  out.state.v = Matrix::Random(n, 2);
  const double radius = out.scenario.r_min + (out.scenario.r_max - out.scenario.r_min) * u(rng);
  const double heading = 6.283185307179586 * u(rng);
  const Vector center = vec2(1.5 + (6 + 10 * u(rng)) * std::cos(heading), 1.5 + (6 + 10 * u(rng)) * std::sin(heading));
  const double lower = case2 ? t0 + 0.5 + 10 * u(rng) : t0 - 10 * u(rng);
  const double upper = std::max(lower, t0) + 0.5 + 10 * u(rng);
  out.window = window(lower, upper, center, radius);
  out.params.margin = 1.01 + u(rng);
  out.params.gain_margin = 1.01 + 3 * u(rng);
  out.params.delta_frac = 0.05 + 0.9 * u(rng);
  out.params.sigma_frac = 0.05 + 0.9 * u(rng);
  out.params.edge_width = u(rng) < 0.5 ? EdgeWidth::Tight : EdgeWidth::Uniform;
  return out;
}

/// Integer boundaries (ties are likely) with distinct deadlines.
inline Scenario random_instance(std::mt19937_64& rng, int max_tasks = 5, int max_levels = 4) {
  const auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ScenarioDescription d;
  d.dimension = 2;
  const int n = pick(1, 5);
  for (int i = 0; i < n; ++i) {
    d.positions.push_back(vec2(0.3 * i, 0.5));
    d.velocities.push_back(Vector::Zero(2));
    if (i > 0) d.edges.emplace_back(i - 1, i);
  }
  d.active = {0};
  d.r_min = 0.5;
  d.r_max = 1.0;
  d.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const int m = pick(1, max_tasks);
  std::vector<int> deadlines(40);
  std::iota(deadlines.begin(), deadlines.end(), 6);
  std::shuffle(deadlines.begin(), deadlines.end(), rng);
  for (int l = 0; l < m; ++l) {
    const int levels = pick(2, max_levels);
    const int deadline = deadlines[static_cast<std::size_t>(l)];
    std::vector<int> inner;
    while (static_cast<int>(inner.size()) < levels - 2) {
      const int b = pick(1, deadline - 1);
      if (std::find(inner.begin(), inner.end(), b) == inner.end()) inner.push_back(b);
    }
    std::sort(inner.rbegin(), inner.rend());
    std::vector<double> boundaries{static_cast<double>(deadline)};
    for (int b : inner) boundaries.push_back(b);
    boundaries.push_back(0.0);
    std::vector<double> rewards{-static_cast<double>(pick(1, 20))};
    for (int k = 1; k < levels; ++k) rewards.push_back(pick(0, 12));
    // Centers on a coarse lattice far from the agents, so ties in cost occur.
    const Vector center = vec2(10 + 4 * (l % 3), 10 + 4 * (l / 3));
    d.tasks.push_back(make_task(l + 1, center, 0.5 + 0.1 * pick(0, 5), boundaries, rewards));
  }
  return validate_scenario(d);
}

struct Extremes {
  double max_reward = -std::numeric_limits<double>::infinity();
  double min_cost = std::numeric_limits<double>::infinity();
};

/// Straight enumeration with its own feasibility and cost arithmetic.
inline Extremes enumerate_extremes(const Scenario& s, bool initial_leg) {
  const int m = s.task_count();
  const double eps = compute_epsilon(s.tasks);
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 1);
  Extremes out;
  do {
    std::vector<int> qos(static_cast<std::size_t>(m), 0);
    while (true) {
      bool feasible = true;
      double prev = -1.0;
      for (int id : order) {
        const TaskSpec& t = s.task(id);
        const int k = qos[static_cast<std::size_t>(id - 1)];
        const double ee = k == 0 ? t.deadline + eps : t.boundaries[static_cast<std::size_t>(k - 1)];
        if (!(ee > prev)) feasible = false;
        prev = ee;
      }
      if (feasible) {
        double reward = 0.0;
        for (int l = 1; l <= m; ++l) reward += s.task(l).rewards[static_cast<std::size_t>(qos[l - 1])];
        double cost = 0.0;
        const Vector* last = nullptr;
        for (int id : order) {
          if (qos[static_cast<std::size_t>(id - 1)] == 0) continue;
          const Vector& c = s.task(id).region.center;
          if (last == nullptr) {
            if (initial_leg) {
              for (int i = 0; i < s.agent_count(); ++i) cost += (s.initial.x.row(i).transpose() - c).norm();
            }
          } else {
            cost += s.agent_count() * (*last - c).norm();
          }
          last = &c;
        }
        out.max_reward = std::max(out.max_reward, reward);
        out.min_cost = std::min(out.min_cost, cost);
      }
      int l = 0;
      while (l < m && ++qos[static_cast<std::size_t>(l)] == s.task(l + 1).levels()) qos[static_cast<std::size_t>(l++)] = 0;
      if (l == m) break;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

}  // namespace qosppc::testing
