#include "microswarm/planner.hpp"

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "microswarm/random.hpp"

using namespace microswarm;

namespace {

SwarmParams params_n(int n, double turn_gain = 20.0) {
  SwarmParams p;
  p.n = n;
  p.turn_gain = turn_gain;
  return p;
}

Environment empty_world(double size = 20.0) {
  Environment env;
  env.xmin = 0.0;
  env.ymin = 0.0;
  env.xmax = size;
  env.ymax = size;
  return env;
}

SafetyParams default_safety() { return SafetyParams{}; }

bool trajectory_collision_free(const Trajectory& traj, const Environment& env,
                               const SafetyParams& safety) {
  for (int i = 0; i < traj.num_states(); ++i)
    if (!collision_free(traj.state(i), env, safety)) return false;
  return true;
}

}  // namespace

TEST_CASE("collision predicate handles separation, contact and bounds") {
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();

  CHECK(collision_free(
      SwarmState::from_robots({{2, 2, 0}, {12, 12, 0}}), env, safety));
  CHECK_FALSE(collision_free(
      SwarmState::from_robots({{5, 5, 0}, {5, 5, 1}}), env, safety));

  // Exactly touching bodies count as free (boundary inclusive).
  const double contact = 2.0 * safety.robot_radius;
  CHECK(collision_free(
      SwarmState::from_robots({{5, 5, 0}, {5 + contact, 5, 0}}), env, safety));
  CHECK_FALSE(collision_free(
      SwarmState::from_robots({{5, 5, 0}, {5 + 0.999 * contact, 5, 0}}), env,
      safety));

  // Wall inset by the robot radius, inclusive.
  CHECK(collision_free(
      SwarmState::from_robots({{safety.robot_radius, 5, 0}, {10, 10, 0}}), env,
      safety));
  CHECK_FALSE(collision_free(
      SwarmState::from_robots({{0.5 * safety.robot_radius, 5, 0}, {10, 10, 0}}),
      env, safety));
}

TEST_CASE("obstacle clearance is measured from the boundary") {
  Environment env = empty_world();
  env.obstacles.push_back({Eigen::Vector2d(10, 10), 2.0});
  const SafetyParams safety = default_safety();

  const double ok_x = 10 + 2.0 + safety.robot_radius + 1e-9;
  CHECK(collision_free(
      SwarmState::from_robots({{ok_x, 10, 0}, {2, 2, 0}}), env, safety));
  CHECK_FALSE(collision_free(
      SwarmState::from_robots({{ok_x - 0.01, 10, 0}, {2, 2, 0}}), env, safety));

  // The 25% margin used for prediction trips earlier.
  CHECK_FALSE(collision_free(
      SwarmState::from_robots({{ok_x, 10, 0}, {2, 2, 0}}), env, safety, 1.25));
}

TEST_CASE("clearance check requires the full random-walk separation") {
  Environment env = empty_world();
  const SafetyParams safety = default_safety();
  CHECK(has_clearance(
      SwarmState::from_robots({{2, 2, 0}, {2 + safety.clearance_d, 2, 0}}), env,
      safety));
  CHECK_FALSE(has_clearance(
      SwarmState::from_robots({{2, 2, 0}, {2 + 0.9 * safety.clearance_d, 2, 0}}),
      env, safety));
}

TEST_CASE("collision prediction sees head-on approaches within the horizon") {
  const GroupAllocation alloc = allocate_groups(2);
  // Slow turning keeps the construction head-on while the pair advances.
  const SwarmParams params = params_n(2, 0.05);
  const Environment env = empty_world();
  SafetyParams safety = default_safety();
  safety.horizon_h = 10;

  // Face to face, 3 units apart, both driving forward whenever either
  // group activates.
  const SwarmState q =
      SwarmState::from_robots({{8, 10, 0}, {11, 10, std::numbers::pi}});
  ControlSequence u(10, 0.5);
  ActivationSequence nu;
  for (int i = 0; i < 10; ++i) nu.push_back(i % 2);
  CHECK(predict_collision(q, u, nu, env, safety, alloc, params));

  // Step-by-step oracle: distances shrink monotonically to contact.
  SwarmState sim = q;
  double prev = (sim.position(0) - sim.position(1)).norm();
  bool hit = false;
  for (int i = 0; i < 10 && !hit; ++i) {
    sim = step_discrete(sim, nu[i], u[i], alloc, params);
    const double d = (sim.position(0) - sim.position(1)).norm();
    CHECK(d <= prev);
    prev = d;
    hit = d < 2.5 * safety.robot_radius;  // margin-inflated threshold
  }
  CHECK(hit);

  // Parallel lanes never collide.
  const SwarmState lanes = SwarmState::from_robots({{2, 5, 0}, {2, 15, 0}});
  CHECK_FALSE(predict_collision(lanes, u, nu, env, safety, alloc, params));

  // A single zero-input step from a safe state predicts nothing.
  ControlSequence zero{0.0};
  ActivationSequence one_group{0};
  SafetyParams h1 = safety;
  h1.horizon_h = 1;
  CHECK_FALSE(predict_collision(lanes, zero, one_group, env, h1, alloc, params));
}

TEST_CASE("random walk returns immediately when clearance already holds") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();
  const SwarmState q = SwarmState::from_robots({{5, 5, 0}, {15, 15, 0}});
  const WalkResult result = random_walk(q, env, safety, alloc, params, 9);
  CHECK(result.reached_clearance);
  CHECK(result.attempts == 0);
  CHECK(result.state == q);
}

TEST_CASE("random walk separates close robots to the required distance") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();
  const SwarmState q = SwarmState::from_robots({{10, 10, 0.4}, {10.5, 10, 2.0}});
  REQUIRE(collision_free(q, env, safety));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const WalkResult result = random_walk(q, env, safety, alloc, params, seed);
    REQUIRE(result.reached_clearance);
    CHECK(has_clearance(result.state, env, safety));
    // Every accepted step stayed collision-free.
    for (const auto& s : result.visited)
      CHECK(collision_free(s, env, safety));
  }
}

TEST_CASE("random walk is deterministic in the seed") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();
  const SwarmState q = SwarmState::from_robots({{10, 10, 0.4}, {10.5, 10, 2.0}});
  const WalkResult a = random_walk(q, env, safety, alloc, params, 33);
  const WalkResult b = random_walk(q, env, safety, alloc, params, 33);
  CHECK(a.attempts == b.attempts);
  REQUIRE(a.visited.size() == b.visited.size());
  for (std::size_t i = 0; i < a.visited.size(); ++i)
    CHECK(a.visited[i] == b.visited[i]);
}

TEST_CASE("plans with the goal at the start finish immediately") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();
  const SwarmState q = SwarmState::from_robots({{5, 5, 0}, {15, 15, 0}});

  NcCaOptions options;
  const PlanResult plan = nc_ca(q, q.positions(), 10, env, safety, alloc,
                                params, 7, options);
  CHECK(plan.reached_goal);
  CHECK_FALSE(plan.timed_out);
  CHECK(plan.travel == 0.0);
}

TEST_CASE("nc-ca rejects invalid start or goal configurations") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();
  const SwarmState collided = SwarmState::from_robots({{5, 5, 0}, {5.1, 5, 0}});
  CHECK_THROWS_AS(nc_ca(collided, collided.positions(), 10, env, safety, alloc,
                        params, 1, {}),
                  std::invalid_argument);

  const SwarmState fine = SwarmState::from_robots({{5, 5, 0}, {15, 15, 0}});
  Eigen::VectorXd goal(4);
  goal << 10, 10, 10.1, 10;  // colliding goal configuration
  CHECK_THROWS_AS(nc_ca(fine, goal, 10, env, safety, alloc, params, 1, {}),
                  std::invalid_argument);
}

TEST_CASE("nc-ca produces a safe, deterministic plan with alternating phases") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world();
  const SafetyParams safety = default_safety();
  // Crossing assignments force the pair through the middle.
  const SwarmState start = SwarmState::from_robots({{4, 10, 0}, {16, 10, 0}});
  Eigen::VectorXd goal(4);
  goal << 16, 10.3, 4, 9.7;

  NcCaOptions options;
  options.wall_budget_seconds = 120.0;
  options.solver.starts = 4;
  const PlanResult plan =
      nc_ca(start, goal, 30, env, safety, alloc, params, 11, options);
  REQUIRE(plan.reached_goal);
  CHECK(trajectory_collision_free(plan.trajectory, env, safety));
  CHECK(plan.travel == doctest::Approx(travel_length(plan.trajectory)));

  // Phases partition the steps and alternate, starting and ending with
  // numerical control.
  REQUIRE(!plan.phases.empty());
  CHECK(plan.phases.front().kind == PhaseKind::kNumericalControl);
  CHECK(plan.phases.back().kind == PhaseKind::kNumericalControl);
  int expected_begin = 0;
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    CHECK(plan.phases[i].begin_step == expected_begin);
    CHECK(plan.phases[i].end_step > plan.phases[i].begin_step);
    expected_begin = plan.phases[i].end_step;
    if (i > 0) CHECK(plan.phases[i].kind != plan.phases[i - 1].kind);
  }
  CHECK(expected_begin == plan.trajectory.num_steps());

  const PlanResult again =
      nc_ca(start, goal, 30, env, safety, alloc, params, 11, options);
  REQUIRE(again.trajectory.num_states() == plan.trajectory.num_states());
  for (int i = 0; i < plan.trajectory.num_states(); ++i)
    CHECK(again.trajectory.state(i) == plan.trajectory.state(i));

  const PlanMetrics metrics = plan_metrics(plan);
  CHECK(metrics.nc_phases >= 1);
  CHECK(metrics.travel == plan.travel);

  // Travel is additive over the phase partition.
  double phase_travel = 0.0;
  for (const auto& phase : plan.phases) {
    std::vector<SwarmState> slice;
    for (int i = phase.begin_step; i <= phase.end_step; ++i)
      slice.push_back(plan.trajectory.state(i));
    phase_travel += travel_length(Trajectory(slice));
  }
  CHECK(phase_travel == doctest::Approx(plan.travel).epsilon(1e-9));
}

TEST_CASE("composition rrt succeeds instantly when already at the goal") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world(10.0);
  const SafetyParams safety = default_safety();
  const SwarmState q = SwarmState::from_robots({{2, 2, 0}, {8, 8, 0}});
  const PlanResult plan = composition_rrt(q, q.positions(), env, safety, alloc,
                                          params, 3, 1000, {});
  CHECK(plan.reached_goal);
  CHECK(plan.travel == 0.0);
  CHECK(plan.trajectory.num_states() == 1);
}

TEST_CASE("composition rrt steers two robots across an empty world") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world(10.0);
  const SafetyParams safety = default_safety();
  const SwarmState start = SwarmState::from_robots({{2, 2, 0.3}, {8, 2, 2.0}});
  Eigen::VectorXd goal(4);
  goal << 3, 8, 7, 8;

  int successes = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PlanResult plan = composition_rrt(start, goal, env, safety, alloc,
                                            params, seed, 100000, {});
    if (!plan.reached_goal) continue;
    ++successes;
    CHECK(trajectory_collision_free(plan.trajectory, env, safety));
    // Goal tolerance per robot.
    for (int j = 0; j < 2; ++j)
      CHECK((plan.trajectory.back().position(j) -
             Eigen::Vector2d(goal.segment<2>(2 * j)))
                .norm() <= RrtOptions{}.goal_eps);
  }
  CHECK(successes >= 4);
}

TEST_CASE("rrt trees replay their edges deterministically") {
  const GroupAllocation alloc = allocate_groups(2);
  const SwarmParams params = params_n(2);
  const Environment env = empty_world(10.0);
  const SafetyParams safety = default_safety();
  const SwarmState start = SwarmState::from_robots({{2, 2, 0.3}, {8, 2, 2.0}});
  Eigen::VectorXd goal(4);
  goal << 3, 8, 7, 8;
  const PlanResult a =
      composition_rrt(start, goal, env, safety, alloc, params, 1, 100000, {});
  const PlanResult b =
      composition_rrt(start, goal, env, safety, alloc, params, 1, 100000, {});
  REQUIRE(a.trajectory.num_states() == b.trajectory.num_states());
  for (int i = 0; i < a.trajectory.num_states(); ++i)
    CHECK(a.trajectory.state(i) == b.trajectory.state(i));
}

TEST_CASE("plan metrics aggregate phase counts") {
  PlanResult result;
  result.trajectory.push_back(SwarmState::from_robots({{0, 0, 0}, {1, 1, 0}}));
  result.travel = 0.0;
  result.wall_time = 0.25;
  result.phases.push_back({PhaseKind::kNumericalControl, 0, 4});
  result.phases.push_back({PhaseKind::kRandomWalk, 4, 6});
  result.phases.push_back({PhaseKind::kNumericalControl, 6, 9});
  const PlanMetrics metrics = plan_metrics(result);
  CHECK(metrics.nc_phases == 2);
  CHECK(metrics.walk_phases == 1);
  CHECK(metrics.timed_out == false);
}
