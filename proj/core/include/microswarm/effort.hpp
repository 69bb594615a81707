#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "microswarm/swarm.hpp"

namespace microswarm {

/// Fixed-sequence minimum-effort steering problem: find inputs
/// u in [0, input_bound]^k that drive the swarm's positions from q0 to
/// goal_positions under the given activation sequence while minimizing
/// sum_i |active(nu_i)| * u_i.
struct EffortProblem {
  SwarmState q0;
  Eigen::VectorXd goal_positions;  // 2n
  ActivationSequence nu;
  double input_bound = 3.5;
  double eps = 1e-3;  // endpoint tolerance, max-norm
};

struct EffortSolution {
  ControlSequence u;
  double objective = 0.0;       // sum_i |active(nu_i)| * u_i
  double endpoint_error = 0.0;  // max-norm position miss
  bool converged = false;
};

struct EffortOptions {
  int starts = 8;
  int max_outer = 10;
  int max_inner = 2000;
  double penalty_init = 1.0;
  double penalty_growth = 10.0;
  std::uint64_t seed = 0;
};

/// Solve the steering problem as a smooth NLP: an augmented-Lagrangian
/// outer loop on the 2n endpoint equalities around a projected-gradient
/// inner loop, with rollout gradients from reverse accumulation through
/// the exact step map. Runs options.starts seeded starts (u uniform in
/// [0, input_bound/4]) and returns the best feasible solution, or the
/// closest-to-feasible one with converged = false. Infeasibility is
/// reported, never thrown.
EffortSolution min_effort_control(const EffortProblem& problem,
                                  const GroupAllocation& alloc,
                                  const SwarmParams& params,
                                  const EffortOptions& options = {});

/// Objective gradient of the augmented-Lagrangian inner problem at u;
/// exposed for verification against finite differences.
Eigen::VectorXd rollout_gradient(const EffortProblem& problem,
                                 const GroupAllocation& alloc,
                                 const SwarmParams& params,
                                 const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& lambda, double rho);

/// Uniform i.i.d. group indices from a seeded deterministic generator.
ActivationSequence random_activation_sequence(int k, int m,
                                              std::uint64_t seed);

struct SweepRow {
  int k = 0;
  double mean_objective = 0.0;
  double mean_solve_seconds = 0.0;
  int converged_trials = 0;
  int excluded_trials = 0;  // non-converged, excluded from the means
};

/// Seed used for one sweep trial; exposed so a single trial can be
/// reproduced with min_effort_control directly.
std::uint64_t sweep_trial_seed(std::uint64_t seed, int k, int trial);

/// For each control-sequence length, average the solved objective over
/// `trials` random activation sequences.
std::vector<SweepRow> steps_vs_length_sweep(
    const SwarmState& q0, const Eigen::VectorXd& goal_positions,
    const std::vector<int>& k_values, int trials, std::uint64_t seed,
    const GroupAllocation& alloc, const SwarmParams& params,
    double eps = 1e-3, double input_bound = 3.5,
    const EffortOptions& options = {});

struct SelectiveMotionResult {
  ControlSequence u;  // one input per primitive slot, reused every repetition
  double target_error = 0.0;
  double max_other_error = 0.0;
  bool converged = false;
};

struct SelectiveMotionOptions {
  double tol = 1e-2;
  int starts = 8;
  int max_iterations = 400;
  std::uint64_t seed = 0;
};

/// Find per-primitive inputs such that repeating the primitive `reps`
/// times displaces the target robot by `displacement` while every other
/// robot returns to its start position. Solved as box-constrained
/// nonlinear least squares on the composed map.
SelectiveMotionResult solve_selective_motion(
    const SwarmState& q0, const ActivationSequence& primitive, int target,
    const Eigen::Vector2d& displacement, int reps,
    const GroupAllocation& alloc, const SwarmParams& params,
    const SelectiveMotionOptions& options = {});

}  // namespace microswarm
