#pragma once

#include <Eigen/Core>
#include <vector>

#include "microswarm/groups.hpp"

namespace microswarm {

/// Pose of one robot: planar position plus heading in [0, 2*pi).
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Wrap an angle into [0, 2*pi).
double normalize_angle(double theta);

/// Shortest angular distance between two headings.
double angle_distance(double a, double b);

/// Shared physical parameters of the swarm.
///
/// turn_gain is the heading change per unit of forward input applied to
/// a rotating robot (the rotation rate is turn_gain times the drive
/// input, i.e. the reciprocal 1/r of the common turning radius);
/// input_bound is the largest admissible input per step. The default
/// gain corresponds to a turning radius of 0.05 length units.
struct SwarmParams {
  int n = 2;
  double delta_t = 1.0;
  double turn_gain = 20.0;
  double input_bound = 3.5;

  void validate() const;
};

/// Full swarm configuration q in R^{3n}: the 2n position coordinates
/// [x_1, y_1, ..., x_n, y_n] followed by the n headings.
class SwarmState {
 public:
  SwarmState(Eigen::VectorXd positions, Eigen::VectorXd orientations);

  /// All robots at the given poses.
  static SwarmState from_robots(const std::vector<RobotState>& robots);

  /// Rebuild from a stacked 3n vector (positions then orientations).
  static SwarmState from_vector(const Eigen::VectorXd& q);

  int num_robots() const { return static_cast<int>(orientations_.size()); }
  const Eigen::VectorXd& positions() const { return positions_; }
  const Eigen::VectorXd& orientations() const { return orientations_; }

  RobotState robot(int j) const;
  Eigen::Vector2d position(int j) const {
    return positions_.segment<2>(2 * j);
  }
  double orientation(int j) const { return orientations_[j]; }

  /// Stacked 3n vector (positions then orientations).
  Eigen::VectorXd to_vector() const;

  bool operator==(const SwarmState& other) const;

 private:
  Eigen::VectorXd positions_;     // 2n
  Eigen::VectorXd orientations_;  // n, each in [0, 2*pi)
};

/// One control vector field: per-robot position blocks plus per-robot
/// rotation rates. For each robot exactly one of the two parts is
/// nonzero: driving robots carry (cos theta, sin theta) and zero spin,
/// rotating robots carry a zero block and spin turn_gain.
struct VectorField {
  Eigen::VectorXd position_part;     // 2n
  Eigen::VectorXd orientation_part;  // n
};

using ActivationSequence = std::vector<int>;     // group index per step
using ControlSequence = std::vector<double>;     // input per step

/// Sequence of swarm states visited by a rollout (k + 1 states for k steps).
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<SwarmState> states)
      : states_(std::move(states)) {}

  int num_states() const { return static_cast<int>(states_.size()); }
  int num_steps() const { return num_states() - 1; }
  const SwarmState& state(int i) const { return states_[i]; }
  const SwarmState& back() const { return states_.back(); }
  const std::vector<SwarmState>& states() const { return states_; }

  void push_back(SwarmState s) { states_.push_back(std::move(s)); }
  void append(const Trajectory& tail);  // tail.state(0) must equal back()

 private:
  std::vector<SwarmState> states_;
};

/// Control field of one activation pattern at state q: active robots get
/// their heading direction in the position part, the rest get spin
/// turn_gain. Accepts any activation vector of matching length.
VectorField vector_field(const SwarmState& q, const ActivationVector& alpha,
                         const SwarmParams& params);

/// One epoch of the switched dynamics with the given group active and
/// constant input u. Driving robots translate by u*delta_t along their
/// headings, the rest rotate by turn_gain*u*delta_t; the update is the
/// exact flow of the continuous dynamics under piecewise-constant
/// switching, not an integrator approximation.
SwarmState step_discrete(const SwarmState& q, int group, double u,
                         const GroupAllocation& alloc,
                         const SwarmParams& params);

/// Simulate k steps; returns k + 1 states starting at q0.
Trajectory rollout(const SwarmState& q0, const ActivationSequence& nu,
                   const ControlSequence& u, const GroupAllocation& alloc,
                   const SwarmParams& params);

/// Conic combination sum_i mu_i f_i(q) of the per-group fields, the
/// velocity of the relaxed system whose trajectories the switched system
/// approximates. All mu_i must be nonnegative.
VectorField embedded_field(const SwarmState& q, const Eigen::VectorXd& mu,
                           const GroupAllocation& alloc,
                           const SwarmParams& params);

/// Sum over robots of the polyline arc length of that robot's position
/// path. For rollouts this equals sum_i |active(nu_i)| * u_i * delta_t.
double travel_length(const Trajectory& traj);

}  // namespace microswarm
