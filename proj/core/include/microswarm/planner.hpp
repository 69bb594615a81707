#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "microswarm/effort.hpp"
#include "microswarm/swarm.hpp"

namespace microswarm {

struct CircularObstacle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

/// Rectangular workspace with circular obstacles.
struct Environment {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 20.0;
  double ymax = 20.0;
  std::vector<CircularObstacle> obstacles;

  void validate() const;
};

struct SafetyParams {
  double robot_radius = 0.2;
  /// Separation every robot must regain before numerical control resumes
  /// (robot centers pairwise, and distance to obstacle boundaries).
  double clearance_d = 1.0;
  /// Steps simulated ahead when predicting collisions.
  int horizon_h = 10;
  /// Random-walk attempt budget.
  int rw_max_steps = 50000;

  void validate() const;
};

/// True iff every pairwise robot center distance is >= 2*robot_radius,
/// every robot is at least robot_radius from every obstacle boundary,
/// and all robots lie inside the bounds inset by robot_radius. All
/// comparisons are boundary-inclusive. `margin` scales the thresholds
/// (collision prediction passes 1.25).
bool collision_free(const SwarmState& q, const Environment& env,
                    const SafetyParams& safety, double margin = 1.0);

/// True when every pairwise distance and obstacle clearance is at least
/// clearance_d; the random walk's exit condition.
bool has_clearance(const SwarmState& q, const Environment& env,
                   const SafetyParams& safety);

/// Simulate min(horizon_h, |plan|) steps of the remaining plan; true iff
/// any simulated state violates collision_free with thresholds inflated
/// by 25%.
bool predict_collision(const SwarmState& q, const ControlSequence& u_plan,
                       const ActivationSequence& nu_plan,
                       const Environment& env, const SafetyParams& safety,
                       const GroupAllocation& alloc, const SwarmParams& params);

struct WalkResult {
  SwarmState state;
  /// Accepted steps, in order (each is one trajectory step).
  std::vector<SwarmState> visited;
  int attempts = 0;
  bool reached_clearance = false;
};

/// Group-based random walk: repeatedly activate a uniform random group
/// with a uniform random input in (0, input_bound], rejecting any step
/// that violates collision_free, until every pairwise and obstacle
/// clearance is at least clearance_d or the attempt budget runs out.
WalkResult random_walk(const SwarmState& q, const Environment& env,
                       const SafetyParams& safety,
                       const GroupAllocation& alloc, const SwarmParams& params,
                       std::uint64_t seed);

enum class PhaseKind { kNumericalControl, kRandomWalk };

struct Phase {
  PhaseKind kind = PhaseKind::kNumericalControl;
  int begin_step = 0;  // inclusive
  int end_step = 0;    // exclusive
};

struct PlanResult {
  Trajectory trajectory;
  std::vector<Phase> phases;
  double travel = 0.0;
  double wall_time = 0.0;
  bool timed_out = false;
  bool reached_goal = false;
};

struct NcCaOptions {
  /// Goal tolerance on final positions (max-norm).
  double eps = 1e-3;
  double wall_budget_seconds = 60.0;
  /// Hard cap on plan/walk alternations, a deterministic stop.
  int max_phases = 200;
  EffortOptions solver;
};

/// Numerical control with collision avoidance: loop { solve the
/// minimum-effort problem from the current state under a fresh random
/// activation sequence; execute it step by step; when a future collision
/// is predicted, random-walk to a clear intermediate state and replan }
/// until the positions reach the goal. Every state of the returned
/// trajectory satisfies collision_free.
PlanResult nc_ca(const SwarmState& q_start,
                 const Eigen::VectorXd& goal_positions, int k,
                 const Environment& env, const SafetyParams& safety,
                 const GroupAllocation& alloc, const SwarmParams& params,
                 std::uint64_t seed, const NcCaOptions& options = {});

struct RrtOptions {
  /// Per-robot goal tolerance.
  double goal_eps = 0.75;
  double goal_bias = 0.10;
  /// Cap on dynamics micro-steps per extension.
  int max_extend_steps = 20;
  /// Candidate (input, step-count) draws per extension; the one ending
  /// closest to the sample wins.
  int steer_candidates = 3;
  double wall_budget_seconds = 3600.0;
};

/// Baseline sampling planner in the robots' composite position space:
/// sample a composite point (goal-biased), find the Euclidean-nearest
/// tree node, randomly pick a group and steer with the true switched
/// dynamics, keeping collision-free prefixes. Succeeds when a node
/// brings every robot within goal_eps of its goal position.
PlanResult composition_rrt(const SwarmState& q_start,
                           const Eigen::VectorXd& goal_positions,
                           const Environment& env, const SafetyParams& safety,
                           const GroupAllocation& alloc,
                           const SwarmParams& params, std::uint64_t seed,
                           int node_budget, const RrtOptions& options = {});

struct PlanMetrics {
  double travel = 0.0;
  double wall_time = 0.0;
  bool timed_out = false;
  int nc_phases = 0;
  int walk_phases = 0;
};

PlanMetrics plan_metrics(const PlanResult& result);

}  // namespace microswarm
