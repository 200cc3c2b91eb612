#include "doctest.h"

#include "qosppc/controller.hpp"
#include "qosppc/errors.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace qosppc;
using qosppc::testing::make_task;
using qosppc::testing::line_scenario;
using qosppc::testing::random_draw;
using qosppc::testing::RandomDraw;
using qosppc::testing::state_of;
using qosppc::testing::vec2;
using qosppc::testing::window;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

/// Case I control law written out term by term for two agents and one edge,
/// agent 0 active.
Eigen::Matrix2d two_agent_case1(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Vector2d& v1,
                                const Eigen::Vector2d& v2, const Eigen::Vector2d& c, double beta, double gamma,
                                double k) {
  const double d1 = (x1 - c).norm();
  const double xi1 = d1 / beta;
  const double zeta1 = std::log(1.0 / (1.0 - xi1));
  const double dzeta1 = 1.0 / (1.0 - xi1);
  const double d12 = (x1 - x2).norm();
  const double xi12 = d12 / gamma;
  const double eps12 = std::log(1.0 / (1.0 - xi12));
  const double deps12 = 1.0 / (1.0 - xi12);
  const Eigen::Vector2d n1 = (x1 - c) / d1;
  const Eigen::Vector2d n12 = (x1 - x2) / d12;
  const Eigen::Vector2d n21 = -n12;
  Eigen::Matrix2d u;
  u.row(0) = (-(1.0 / gamma) * deps12 * eps12 * n12 - (1.0 / beta) * dzeta1 * zeta1 * n1 - k * v1).transpose();
  u.row(1) = (-(1.0 / gamma) * deps12 * eps12 * n21 - k * v2).transpose();
  return u;
}

}  // namespace

TEST_CASE("case classification") {
  CHECK(classify_case(0, 0) == ControlCase::CaseI);
  CHECK(classify_case(5, 9) == ControlCase::CaseII);
  CHECK(classify_case(10, 5) == ControlCase::CaseI);
}

TEST_CASE("case I rates follow the closed forms") {
  // Two agents, tight edges: gamma_bar = 2 r_max = 3 and sigma = sigma_frac / 4.
  const double d = 12.0 / 1.05;
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0)});
  SynthesisParams p;
  p.edge_width = EdgeWidth::Tight;
  p.sigma_frac = 2.0;  // sigma = 0.5
  const TaskController c = synth_case1(state_of(s), window(0, 10, vec2(d, 0), 1.0), s, p);
  REQUIRE(c.kind == ControlCase::CaseI);
  CHECK(c.gamma_bar == 3.0);
  CHECK(c.sigma == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.tracking[0].beta0 == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(c.tracking[0].kappa1 == doctest::Approx(std::log(24.0) / 10).epsilon(1e-14));
  CHECK(c.tracking[0].kappa1 == doctest::Approx(0.31780).epsilon(1e-5));
}

TEST_CASE("case I edge rate") {
  // Four agents, gamma0 = 2 on the first edge, gamma_bar = 3 and sigma = sigma_frac / 10.
  const Scenario s = line_scenario({vec2(0, 0), vec2(2.0 / 1.05, 0), vec2(2.0 / 1.05, 0.2), vec2(2.0 / 1.05, 0.4)});
  SynthesisParams p;
  p.edge_width = EdgeWidth::Tight;
  p.sigma_frac = 5.0;  // sigma = 0.5
  const TaskController c = synth_case1(state_of(s), window(0, 10, vec2(12, 12), 1.0), s, p);
  CHECK(c.edges[0].gamma0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(c.edges[0].mu1 == doctest::Approx(std::log(12.0) / 10).epsilon(1e-14));
  CHECK(c.edges[0].mu1 == doctest::Approx(0.24849).epsilon(1e-5));
  // Short edges are floored at r_min / (N - 1).
  CHECK(c.edges[1].gamma0 == doctest::Approx(1.05 / 3).epsilon(1e-14));
}

TEST_CASE("uniform edge widths start at gamma_bar") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0), vec2(4.0, 0)});
  const TaskController c = synth_case1(state_of(s), window(0, 10, vec2(12, 12), 1.0), s, {});
  CHECK(c.gamma_bar == doctest::Approx(1.05 * 3.5));
  for (const auto& e : c.edges) CHECK(e.gamma0 == c.gamma_bar);
  CHECK(c.sigma == doctest::Approx(0.9 * 1.0 / (2 * c.gamma_bar + 1.0)));
}

TEST_CASE("case II tracking parameters") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0)});
  const TaskController c = synth_case2(state_of(s), window(4, 10, vec2(5, 0), 1.0), s, {});
  REQUIRE(c.kind == ControlCase::CaseII);
  const auto& f = c.tracking[0];
  CHECK(f.delta == 2.0);
  CHECK(f.alpha0 == 3.0);
  CHECK(f.beta0 == 7.0);
  CHECK(f.kappa2 == doctest::Approx(std::log(3.0) / 4).epsilon(1e-15));
  CHECK(f.kappa2 == doctest::Approx(0.27465).epsilon(1e-5));
  CHECK(f.kappa3 == doctest::Approx(std::log(7.0 / (c.sigma * 3.0)) / 6).epsilon(1e-15));
  CHECK(c.edges[0].kappa2 == f.kappa2);
}

TEST_CASE("case II funnels are continuous at the window opening") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0)});
  const TaskController c = synth_case2(state_of(s), window(4, 10, vec2(5, 0), 1.0), s, {});
  const FunnelBounds at = tracking_bounds(c, 0, 4.0);
  const FunnelBounds after = tracking_bounds(c, 0, std::nextafter(4.0, 5.0));
  CHECK(at.lower == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(at.upper == doctest::Approx(7.0 / 3.0).epsilon(1e-14));
  CHECK(after.lower == doctest::Approx(at.lower).epsilon(1e-12));
  CHECK(after.upper == doctest::Approx(at.upper).epsilon(1e-12));
  CHECK(edge_bound(c, 0, std::nextafter(4.0, 5.0)) == doctest::Approx(edge_bound(c, 0, 4.0)).epsilon(1e-12));
}

TEST_CASE("funnel values at the start and at the window close") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(1, 0), vec2(1, 1), vec2(0, 1)});
  const TaskController c = synth_case1(state_of(s, 2.0), window(1, 12, vec2(10, 8), 1.0), s, {});
  const FunnelBounds start = tracking_bounds(c, 0, 2.0);
  CHECK(start.lower == 0.0);
  CHECK(start.upper == c.tracking[0].beta0);
  CHECK(edge_bound(c, 1, 12.0) == doctest::Approx((1 - c.sigma) * 1.0 / 3).epsilon(1e-12));
  CHECK_THROWS_AS(tracking_bounds(c, 0, 1.5), Error);
  CHECK_THROWS_AS(edge_bound(c, 0, 1.5), Error);
}

TEST_CASE("degenerate windows and agents at the target") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0)});
  CHECK_THROWS_AS(synth_case1(state_of(s, 5.0), window(0, 5, vec2(9, 9), 1.0), s, {}), Error);
  CHECK_THROWS_AS(synth_case2(state_of(s, 5.0), window(5, 9, vec2(9, 9), 1.0), s, {}), Error);
  CHECK_THROWS_AS(synth_case2(state_of(s, 0.0), window(5, 5, vec2(9, 9), 1.0), s, {}), Error);
  try {
    synth_case2(state_of(s), window(3, 9, vec2(0.3, 0.3), 1.0), s, {});
    FAIL("expected AgentInsideTarget");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AgentInsideTarget);
  }
  CHECK_THROWS_AS(synth_case1(state_of(s), window(0, 9, vec2(0, 0), 1.0), s, {}), Error);
}

TEST_CASE("synthesize dispatches on the window opening") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0)});
  TaskWindow w = window(9, 14, vec2(5, 5), 1.0);
  w.start = -100;
  const TaskController late = synthesize(state_of(s, 5.0), w, s, {});
  CHECK(late.kind == ControlCase::CaseII);
  CHECK(late.window.start == 5.0);
  CHECK(synthesize(state_of(s, 9.0), w, s, {}).kind == ControlCase::CaseI);
}

TEST_CASE("normalized errors") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0, 0), vec2(1, 0)});
  const TaskController c2 = synth_case2(state_of(s), window(4, 10, vec2(6, 8), 1.0), s, {});
  const NormalizedErrors e = normalized_errors(c2, s.initial.x, 0.0);
  CHECK(std::abs(e.tracking[0]) < 1e-15);
  CHECK(e.edge[0] == 0.0);

  const TaskController c1 = synth_case1(state_of(s), window(0, 10, vec2(6, 8), 1.0), s, {});
  Matrix x = s.initial.x;
  x.row(0) = (vec2(6, 8) + vec2(c1.tracking[0].beta0, 0)).transpose();
  CHECK_THROWS_AS(normalized_errors(c1, x, 0.0), Error);
  CHECK(compute_normalized_errors(c1, x, 0.0).tracking[0] == doctest::Approx(1.0));
}

TEST_CASE("transform values") {
  const TransformValue a = transform(TransformKind::S1, 0.0);
  CHECK(a.value == 0.0);
  CHECK(a.derivative == 1.0);
  const TransformValue b = transform(TransformKind::S2, 0.0);
  CHECK(b.value == 0.0);
  CHECK(b.derivative == 2.0);
  const TransformValue h = transform(TransformKind::S1, 0.5);
  CHECK(h.value == doctest::Approx(0.69315).epsilon(1e-5));
  CHECK(h.derivative == 2.0);
  CHECK_THROWS_AS(transform(TransformKind::S1, 1.0), Error);
  CHECK_THROWS_AS(transform(TransformKind::S1, -0.1), Error);
  CHECK_THROWS_AS(transform(TransformKind::S2, -1.0), Error);
  CHECK_THROWS_AS(transform(TransformKind::S2, std::nan("")), Error);
}

TEST_CASE("transforms are increasing, S2 is odd, gradients match finite differences") {
  double prev1 = -1.0;
  double prev2 = -1e300;
  for (int k = 0; k < 10000; ++k) {
    const double z1 = k / 10000.0;
    const double z2 = -1.0 + (k + 0.5) / 5000.0;
    const double s1 = transform(TransformKind::S1, z1).value;
    const double s2 = transform(TransformKind::S2, z2).value;
    CHECK(s1 > prev1);
    CHECK(s2 > prev2);
    CHECK(transform(TransformKind::S2, -z2).value == -s2);
    prev1 = s1;
    prev2 = s2;
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const double z1 = 0.01 + 0.94 * u(rng);
    const double fd1 = (transform(TransformKind::S1, z1 + h).value - transform(TransformKind::S1, z1 - h).value) / (2 * h);
    CHECK(std::abs(fd1 - transform(TransformKind::S1, z1).derivative) <= 1e-6);
    const double z2 = -0.95 + 1.9 * u(rng);
    const double fd2 = (transform(TransformKind::S2, z2 + h).value - transform(TransformKind::S2, z2 - h).value) / (2 * h);
    CHECK(std::abs(fd2 - transform(TransformKind::S2, z2).derivative) <= 1e-6);
  }
}

TEST_CASE("control input at rest with vanishing errors") {
  // Passive agents 1 and 2 coincide, so their shared edge contributes nothing.
  const Scenario s = line_scenario({vec2(0, 0), vec2(1, 1), vec2(1, 1)});
  const TaskController c = synth_case1(state_of(s), window(0, 10, vec2(8, 8), 1.0), s, {});
  Matrix x = s.initial.x;
  x.row(0) = x.row(1);
  const Matrix u = control_input(c, x, Matrix::Zero(3, 2), 0.0);
  CHECK(u.row(1).norm() == 0.0);
  CHECK(u.row(2).norm() == 0.0);

  // A lone active agent sitting on the centerline of its Case II funnel.
  const Scenario one = line_scenario({vec2(0, 0)});
  const TaskController c2 = synth_case2(state_of(one), window(4, 10, vec2(6, 8), 1.0), one, {});
  CHECK(control_input(c2, one.initial.x, Matrix::Zero(1, 2), 0.0).norm() < 1e-15);
}

TEST_CASE("case I control matches a direct transcription") {
  Eigen::Vector2d x1(0.3, 0.7), x2(1.4, 0.2), v1(0.5, -0.2), v2(-0.1, 0.3), c(9.0, 6.0);
  const Scenario s = line_scenario({x1, x2});
  const TaskController ctl = synth_case1(state_of(s), window(0, 12, c, 1.2), s, {});
  Matrix x(2, 2), v(2, 2);
  x << x1.transpose(), x2.transpose();
  v << v1.transpose(), v2.transpose();
  for (double t : {0.0, 1.5, 4.0}) {
    // Move the agents partway along the funnel so every term is exercised.
    Matrix xt = x;
    xt.row(0) = (c + (x1 - c) * std::exp(-ctl.tracking[0].kappa1 * t)).transpose();
    const double beta = ctl.tracking[0].beta0 * std::exp(-ctl.tracking[0].kappa1 * t);
    const double gamma = ctl.edges[0].gamma0 * std::exp(-ctl.edges[0].mu1 * t);
    if ((xt.row(0) - xt.row(1)).norm() >= 0.95 * gamma) xt.row(1) = xt.row(0) + 0.3 * gamma * Eigen::RowVector2d(1, 0);
    const Eigen::Matrix2d expected =
        two_agent_case1(xt.row(0).transpose(), xt.row(1).transpose(), v1, v2, c, beta, gamma, ctl.gains[0]);
    const Matrix got = control_input(ctl, xt, v, t);
    CHECK((got - expected).norm() <= 1e-12 * (1 + expected.norm()));
  }
}

TEST_CASE("edge forces are antisymmetric") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    RandomDraw draw = random_draw(rng, trial % 2 == 1);
    TaskController c = synthesize(draw.state, draw.window, draw.scenario, draw.params);
    c.tracking.clear();
    std::fill(c.tracking_slot.begin(), c.tracking_slot.end(), -1);
    const Matrix u = control_input(c, draw.state.x, Matrix::Zero(draw.state.x.rows(), 2), draw.state.t);
    CHECK(u.colwise().sum().norm() <= 1e-12 * (1 + u.norm()));
    // Single edge: exact negation.
    TaskController solo = c;
    solo.edges.resize(1);
    const Matrix us = control_input(solo, draw.state.x, Matrix::Zero(draw.state.x.rows(), 2), draw.state.t);
    const Edge e = solo.edges[0].edge;
    CHECK(us.row(e.i) == -us.row(e.j));
  }
}

TEST_CASE("idle consensus control") {
  const CommGraph two(2, {{0, 1}});
  Matrix x(2, 2), v = Matrix::Zero(2, 2);
  x << 1, 1, 1, 1;
  CHECK(idle_control(x, v, 1.0, 2.0, two).norm() == 0.0);
  x << 3, 1, 1, 0;
  const Matrix u = idle_control(x, v, 1.5, 2.0, two);
  CHECK(u(0, 0) == -3.0);
  CHECK(u(0, 1) == -1.5);
  CHECK(u.row(1) == -u.row(0));
  x << 1, 1, 1, 1;
  v << 0.5, -2, 0, 0;
  const Matrix w = idle_control(x, v, 1.0, 2.0, two);
  CHECK(w(0, 0) == -1.0);
  CHECK(w(0, 1) == 4.0);

  const Scenario s = line_scenario({vec2(0, 0), vec2(1, 0)});
  const TaskController idle = make_idle_controller(s, 1.0, 2.0);
  validate_controller(idle);
  CHECK(control_input(idle, x, v, 0.0) == w);
}

TEST_CASE("performance functions are positive and non-increasing") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomDraw d = random_draw(rng, trial % 2 == 1);
    const TaskController c = synthesize(d.state, d.window, d.scenario, d.params);
    const double t0 = c.window.start;
    const double t_end = c.window.upper + 2.0;
    const int steps = 400;
    std::vector<double> prev;
    for (int k = 0; k <= steps; ++k) {
      const double t = t0 + (t_end - t0) * k / steps;
      std::vector<double> now;
      for (std::size_t s = 0; s < c.tracking.size(); ++s) {
        const FunnelBounds b = tracking_bounds(c, s, t);
        now.push_back(b.lower);
        now.push_back(b.upper);
      }
      for (std::size_t e = 0; e < c.edges.size(); ++e) now.push_back(edge_bound(c, e, t));
      for (std::size_t j = 0; j < now.size(); ++j) {
        CHECK(std::isfinite(now[j]));
        CHECK(now[j] >= 0.0);
        if (!prev.empty()) CHECK(now[j] <= prev[j] * (1 + 1e-12));
      }
      prev = now;
    }
  }
}

TEST_CASE("closing-time identities hold to machine precision") {
  std::mt19937_64 rng(321);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool case2 = trial % 2 == 1;
    const RandomDraw d = random_draw(rng, case2);
    const TaskController c = synthesize(d.state, d.window, d.scenario, d.params);
    const double r = c.window.target.radius;
    const int n_minus_1 = c.agent_count - 1;
    for (std::size_t s = 0; s < c.tracking.size(); ++s) {
      CHECK(rel(tracking_bounds(c, s, c.window.upper).upper, c.sigma * r) <= 1e-12);
      if (case2) CHECK(rel(tracking_bounds(c, s, c.window.lower).lower, r) <= 1e-12);
    }
    if (!case2) {
      const double target = (1 - c.sigma) * d.scenario.r_min / n_minus_1;
      for (std::size_t e = 0; e < c.edges.size(); ++e) {
        const double g = edge_bound(c, e, c.window.upper);
        CHECK(rel(g, target) <= 1e-12);
        CHECK(n_minus_1 * g + c.sigma * r <= r * (1 + 1e-15));
      }
    }
  }
}

TEST_CASE("synthesized controllers pass the gain audit") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const RandomDraw d = random_draw(rng, trial % 2 == 1);
    const TaskController c = synthesize(d.state, d.window, d.scenario, d.params);
    CHECK_NOTHROW(validate_controller(c));
    for (double k : c.gains) CHECK(k > c.max_rate());
    if (c.kind == ControlCase::CaseII) {
      CHECK(c.sigma <= c.r_min / ((c.agent_count - 1) * c.gamma_bar + c.r_min));
    }
  }
}

TEST_CASE("corrupted controllers are rejected") {
  const Scenario s = line_scenario({vec2(0, 0), vec2(0.5, 0), vec2(1, 0.5)});
  const TaskController good = synth_case2(state_of(s), window(4, 10, vec2(6, 8), 1.0), s, {});
  const auto rejected = [](const TaskController& c) {
    try {
      validate_controller(c);
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidController;
    }
    return false;
  };
  CHECK_FALSE(rejected(good));
  TaskController slow = good;
  slow.gains[0] = 0.5 * good.tracking[0].kappa2;
  CHECK(rejected(slow));
  TaskController wide = good;
  wide.sigma = 0.99;
  CHECK(rejected(wide));
  TaskController narrow = good;
  narrow.edges[0].gamma0 = 0.1;
  CHECK(rejected(narrow));
  TaskController inverted = good;
  inverted.tracking[0].alpha0 = inverted.tracking[0].beta0 + 1;
  CHECK(rejected(inverted));
  TaskController idle = make_idle_controller(s, 0.0, 1.0);
  CHECK(rejected(idle));
}
