#include "microswarm/planner.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "microswarm/random.hpp"

namespace microswarm {

void Environment::validate() const {
  if (!(xmax > xmin) || !(ymax > ymin))
    throw std::invalid_argument("environment bounds are empty");
  for (const auto& o : obstacles)
    if (o.radius <= 0.0)
      throw std::invalid_argument("obstacle radius must be positive");
}

void SafetyParams::validate() const {
  if (robot_radius <= 0.0)
    throw std::invalid_argument("robot_radius must be positive");
  if (clearance_d <= 2.0 * robot_radius)
    throw std::invalid_argument("clearance_d must exceed 2*robot_radius");
  if (horizon_h < 1) throw std::invalid_argument("horizon_h must be >= 1");
  if (rw_max_steps < 1)
    throw std::invalid_argument("rw_max_steps must be >= 1");
}

bool collision_free(const SwarmState& q, const Environment& env,
                    const SafetyParams& safety, double margin) {
  const int n = q.num_robots();
  const double rr = safety.robot_radius * margin;
  const double pair_threshold = 2.0 * rr;
  const double pair_threshold_sq = pair_threshold * pair_threshold;

  for (int a = 0; a < n; ++a) {
    const Eigen::Vector2d pa = q.position(a);
    if (pa.x() < env.xmin + rr || pa.x() > env.xmax - rr ||
        pa.y() < env.ymin + rr || pa.y() > env.ymax - rr)
      return false;
    for (const auto& o : env.obstacles) {
      const double keep_out = o.radius + rr;
      if ((pa - o.center).squaredNorm() < keep_out * keep_out) return false;
    }
    for (int b = a + 1; b < n; ++b) {
      if ((pa - q.position(b)).squaredNorm() < pair_threshold_sq) return false;
    }
  }
  return true;
}

bool has_clearance(const SwarmState& q, const Environment& env,
                   const SafetyParams& safety) {
  const int n = q.num_robots();
  const double d = safety.clearance_d;
  for (int a = 0; a < n; ++a) {
    const Eigen::Vector2d pa = q.position(a);
    for (const auto& o : env.obstacles) {
      const double keep_out = o.radius + d;
      if ((pa - o.center).squaredNorm() < keep_out * keep_out) return false;
    }
    for (int b = a + 1; b < n; ++b)
      if ((pa - q.position(b)).squaredNorm() < d * d) return false;
  }
  return true;
}

bool predict_collision(const SwarmState& q, const ControlSequence& u_plan,
                       const ActivationSequence& nu_plan,
                       const Environment& env, const SafetyParams& safety,
                       const GroupAllocation& alloc,
                       const SwarmParams& params) {
  if (u_plan.size() != nu_plan.size())
    throw std::invalid_argument("plan sequences differ in length");
  const int steps =
      std::min<int>(safety.horizon_h, static_cast<int>(u_plan.size()));
  SwarmState sim = q;
  for (int i = 0; i < steps; ++i) {
    sim = step_discrete(sim, nu_plan[i], u_plan[i], alloc, params);
    if (!collision_free(sim, env, safety, 1.25)) return true;
  }
  return false;
}

WalkResult random_walk(const SwarmState& q, const Environment& env,
                       const SafetyParams& safety,
                       const GroupAllocation& alloc, const SwarmParams& params,
                       std::uint64_t seed) {
  env.validate();
  safety.validate();
  Rng rng(seed);
  WalkResult result{q, {}, 0, false};
  if (has_clearance(result.state, env, safety)) {
    result.reached_clearance = true;
    return result;
  }
  const int m = alloc.num_groups();
  while (result.attempts < safety.rw_max_steps) {
    ++result.attempts;
    const int group = rng.uniform_int(0, m - 1);
    // Input in (0, input_bound]: reject the zero draw of [0, bound).
    const double u = params.input_bound * (1.0 - rng.uniform01());
    SwarmState candidate = step_discrete(result.state, group, u, alloc, params);
    if (!collision_free(candidate, env, safety)) continue;
    result.state = candidate;
    result.visited.push_back(candidate);
    if (has_clearance(result.state, env, safety)) {
      result.reached_clearance = true;
      return result;
    }
  }
  return result;  // budget exhausted, flagged via reached_clearance = false
}

PlanResult nc_ca(const SwarmState& q_start,
                 const Eigen::VectorXd& goal_positions, int k,
                 const Environment& env, const SafetyParams& safety,
                 const GroupAllocation& alloc, const SwarmParams& params,
                 std::uint64_t seed, const NcCaOptions& options) {
  env.validate();
  safety.validate();
  params.validate();
  const int n = q_start.num_robots();
  if (goal_positions.size() != 2 * n)
    throw std::invalid_argument("goal positions must have length 2n");
  if (k < 1) throw std::invalid_argument("steps per control phase must be >= 1");
  if (!collision_free(q_start, env, safety))
    throw std::invalid_argument("start configuration is not collision-free");
  if (!collision_free(SwarmState(goal_positions, q_start.orientations()), env,
                      safety))
    throw std::invalid_argument("goal configuration is not collision-free");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  PlanResult result;
  result.trajectory.push_back(q_start);
  SwarmState current = q_start;
  Rng rng(seed);

  int step_count = 0;
  int nc_begin = 0;  // first step of the open numerical-control phase
  auto close_nc_phase = [&]() {
    if (step_count > nc_begin)
      result.phases.push_back(
          Phase{PhaseKind::kNumericalControl, nc_begin, step_count});
  };

  auto at_goal = [&](const SwarmState& s) {
    return (s.positions() - goal_positions).lpNorm<Eigen::Infinity>() <=
           options.eps;
  };

  int phases_used = 0;
  int stalled_plans = 0;
  double prev_goal_distance =
      (current.positions() - goal_positions).lpNorm<Eigen::Infinity>();
  while (phases_used++ < options.max_phases) {
    if (at_goal(current)) {
      result.reached_goal = true;
      break;
    }
    if (elapsed() > options.wall_budget_seconds) {
      result.timed_out = true;
      break;
    }

    // Livelock breaker: when consecutive plans make no headway (their
    // first steps keep getting vetoed), inject a stretch of random safe
    // steps so the next plan starts from a different configuration.
    const double goal_distance =
        (current.positions() - goal_positions).lpNorm<Eigen::Infinity>();
    if (goal_distance > prev_goal_distance - 1e-9) {
      ++stalled_plans;
    } else {
      stalled_plans = 0;
    }
    prev_goal_distance = goal_distance;
    if (stalled_plans >= 3) {
      stalled_plans = 0;
      close_nc_phase();
      Rng walk_rng(rng.next());
      const int walk_begin = step_count;
      int accepted = 0;
      for (int attempt = 0; attempt < safety.rw_max_steps && accepted < 25;
           ++attempt) {
        const int group = walk_rng.uniform_int(0, alloc.num_groups() - 1);
        const double u = params.input_bound * (1.0 - walk_rng.uniform01());
        SwarmState candidate =
            step_discrete(current, group, u, alloc, params);
        if (!collision_free(candidate, env, safety)) continue;
        current = candidate;
        result.trajectory.push_back(current);
        ++step_count;
        ++accepted;
      }
      if (step_count > walk_begin) {
        if (!result.phases.empty() &&
            result.phases.back().kind == PhaseKind::kRandomWalk &&
            result.phases.back().end_step == walk_begin) {
          result.phases.back().end_step = step_count;
        } else {
          result.phases.push_back(
              Phase{PhaseKind::kRandomWalk, walk_begin, step_count});
        }
      }
      nc_begin = step_count;
    }

    EffortProblem problem{current, goal_positions,
                          random_activation_sequence(k, alloc.num_groups(),
                                                     rng.next()),
                          params.input_bound, options.eps};
    EffortOptions solver = options.solver;
    solver.seed = rng.next();
    const EffortSolution sol =
        min_effort_control(problem, alloc, params, solver);

    bool walked = false;
    for (int i = 0; i < k; ++i) {
      ControlSequence u_rest(sol.u.begin() + i, sol.u.end());
      ActivationSequence nu_rest(problem.nu.begin() + i, problem.nu.end());
      if (predict_collision(current, u_rest, nu_rest, env, safety, alloc,
                            params)) {
        WalkResult walk = random_walk(current, env, safety, alloc, params,
                                      rng.next());
        if (!walk.visited.empty()) {
          // Close the control phase only when the walk moved; a walk
          // that finds the clearance already satisfied leaves the
          // control phase open so phases keep alternating.
          close_nc_phase();
          const int walk_begin = step_count;
          for (const auto& s : walk.visited) {
            result.trajectory.push_back(s);
            ++step_count;
          }
          current = walk.state;
          if (!result.phases.empty() &&
              result.phases.back().kind == PhaseKind::kRandomWalk &&
              result.phases.back().end_step == walk_begin) {
            result.phases.back().end_step = step_count;
          } else {
            result.phases.push_back(
                Phase{PhaseKind::kRandomWalk, walk_begin, step_count});
          }
          nc_begin = step_count;
          walked = true;
          break;
        }
        // The prediction fired against the inflated margin while the
        // walk's clearance already holds (typical when goals sit close
        // together). Proceed one step if it is exactly collision-free,
        // otherwise replan with a fresh sequence.
        const SwarmState next =
            step_discrete(current, problem.nu[i], sol.u[i], alloc, params);
        if (!collision_free(next, env, safety)) {
          walked = true;  // force a replan
          break;
        }
        current = next;
        result.trajectory.push_back(current);
        ++step_count;
        continue;
      }
      current = step_discrete(current, problem.nu[i], sol.u[i], alloc, params);
      result.trajectory.push_back(current);
      ++step_count;
      if (elapsed() > options.wall_budget_seconds) break;
    }
    if (walked) continue;
    if (at_goal(current)) {
      result.reached_goal = true;
      break;
    }
  }

  close_nc_phase();
  result.travel = travel_length(result.trajectory);
  result.wall_time = elapsed();
  if (!result.reached_goal && !result.timed_out)
    result.timed_out = true;  // phase budget exhausted without reaching goal
  return result;
}

namespace {

struct RrtNode {
  SwarmState state;
  int parent = -1;
  int group = -1;
  double input = 0.0;
  int steps = 0;
};

double composite_distance_sq(const Eigen::VectorXd& a,
                             const Eigen::VectorXd& b) {
  return (a - b).squaredNorm();
}

bool within_goal(const SwarmState& s, const Eigen::VectorXd& goal,
                 double goal_eps) {
  const int n = s.num_robots();
  for (int j = 0; j < n; ++j) {
    if ((s.position(j) - Eigen::Vector2d(goal.segment<2>(2 * j))).norm() >
        goal_eps)
      return false;
  }
  return true;
}

}  // namespace

PlanResult composition_rrt(const SwarmState& q_start,
                           const Eigen::VectorXd& goal_positions,
                           const Environment& env, const SafetyParams& safety,
                           const GroupAllocation& alloc,
                           const SwarmParams& params, std::uint64_t seed,
                           int node_budget, const RrtOptions& options) {
  env.validate();
  safety.validate();
  params.validate();
  const int n = q_start.num_robots();
  if (goal_positions.size() != 2 * n)
    throw std::invalid_argument("goal positions must have length 2n");
  if (!collision_free(q_start, env, safety))
    throw std::invalid_argument("start configuration is not collision-free");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  Rng rng(seed);
  std::vector<RrtNode> tree;
  tree.push_back(RrtNode{q_start, -1, -1, 0.0, 0});

  int goal_node = within_goal(q_start, goal_positions, options.goal_eps) ? 0
                                                                         : -1;
  bool timed_out = false;

  while (goal_node < 0 && static_cast<int>(tree.size()) < node_budget) {
    if (elapsed() > options.wall_budget_seconds) {
      timed_out = true;
      break;
    }
    // Composite-space sample, goal-biased.
    Eigen::VectorXd sample(2 * n);
    if (rng.uniform01() < options.goal_bias) {
      sample = goal_positions;
    } else {
      for (int j = 0; j < n; ++j) {
        sample[2 * j] = rng.uniform(env.xmin, env.xmax);
        sample[2 * j + 1] = rng.uniform(env.ymin, env.ymax);
      }
    }

    int nearest = 0;
    double best_dist = composite_distance_sq(tree[0].state.positions(), sample);
    for (std::size_t i = 1; i < tree.size(); ++i) {
      const double d = composite_distance_sq(tree[i].state.positions(), sample);
      if (d < best_dist) {
        best_dist = d;
        nearest = static_cast<int>(i);
      }
    }

    // Steer with the true switched dynamics: a random group, then the
    // best of a few (input, step count) draws.
    const int group = rng.uniform_int(0, alloc.num_groups() - 1);
    bool have_candidate = false;
    SwarmState best_state = tree[nearest].state;
    double best_score = 0.0;
    double best_input = 0.0;
    int best_steps = 0;
    for (int c = 0; c < options.steer_candidates; ++c) {
      const double u = params.input_bound * (1.0 - rng.uniform01());
      const int want_steps = rng.uniform_int(1, options.max_extend_steps);
      SwarmState state = tree[nearest].state;
      int done = 0;
      for (int sstep = 0; sstep < want_steps; ++sstep) {
        SwarmState next = step_discrete(state, group, u, alloc, params);
        if (!collision_free(next, env, safety)) break;
        state = next;
        ++done;
      }
      if (done == 0) continue;
      const double score = composite_distance_sq(state.positions(), sample);
      if (!have_candidate || score < best_score) {
        have_candidate = true;
        best_score = score;
        best_state = state;
        best_input = u;
        best_steps = done;
      }
    }
    if (!have_candidate) continue;

    tree.push_back(RrtNode{best_state, nearest, group, best_input, best_steps});
    if (within_goal(best_state, goal_positions, options.goal_eps))
      goal_node = static_cast<int>(tree.size()) - 1;
  }

  // Reconstruct: fall back to the node closest to the goal when the
  // budget ran out.
  int end_node = goal_node;
  if (end_node < 0) {
    end_node = 0;
    double best = composite_distance_sq(tree[0].state.positions(),
                                        goal_positions);
    for (std::size_t i = 1; i < tree.size(); ++i) {
      const double d =
          composite_distance_sq(tree[i].state.positions(), goal_positions);
      if (d < best) {
        best = d;
        end_node = static_cast<int>(i);
      }
    }
  }

  std::vector<int> chain;
  for (int i = end_node; i >= 0; i = tree[i].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());

  PlanResult result;
  result.trajectory.push_back(q_start);
  SwarmState current = q_start;
  for (std::size_t c = 1; c < chain.size(); ++c) {
    const RrtNode& node = tree[chain[c]];
    for (int i = 0; i < node.steps; ++i) {
      current = step_discrete(current, node.group, node.input, alloc, params);
      result.trajectory.push_back(current);
    }
  }
  if (result.trajectory.num_steps() > 0)
    result.phases.push_back(Phase{PhaseKind::kNumericalControl, 0,
                                  result.trajectory.num_steps()});
  result.travel = travel_length(result.trajectory);
  result.wall_time = elapsed();
  result.reached_goal = goal_node >= 0;
  result.timed_out = timed_out || goal_node < 0;
  return result;
}

PlanMetrics plan_metrics(const PlanResult& result) {
  PlanMetrics metrics;
  metrics.travel = result.travel;
  metrics.wall_time = result.wall_time;
  metrics.timed_out = result.timed_out;
  for (const auto& phase : result.phases) {
    if (phase.kind == PhaseKind::kNumericalControl)
      ++metrics.nc_phases;
    else
      ++metrics.walk_phases;
  }
  return metrics;
}

}  // namespace microswarm
