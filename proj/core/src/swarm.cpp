#include "microswarm/swarm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace microswarm {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double normalize_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  // fmod can land exactly on 2*pi after the correction of a tiny negative.
  if (t >= kTwoPi) t = 0.0;
  return t;
}

double angle_distance(double a, double b) {
  double d = std::fabs(normalize_angle(a) - normalize_angle(b));
  return std::min(d, kTwoPi - d);
}

void SwarmParams::validate() const {
  if (n < 2) throw std::invalid_argument("swarm needs n >= 2 robots");
  if (delta_t <= 0.0) throw std::invalid_argument("delta_t must be positive");
  if (turn_gain <= 0.0) throw std::invalid_argument("turn_gain must be positive");
  if (input_bound <= 0.0)
    throw std::invalid_argument("input_bound must be positive");
}

SwarmState::SwarmState(Eigen::VectorXd positions, Eigen::VectorXd orientations)
    : positions_(std::move(positions)), orientations_(std::move(orientations)) {
  const auto n = orientations_.size();
  if (n < 2) throw std::invalid_argument("swarm state needs n >= 2 robots");
  if (positions_.size() != 2 * n)
    throw std::invalid_argument("positions length must be 2n");
  for (Eigen::Index j = 0; j < n; ++j)
    orientations_[j] = normalize_angle(orientations_[j]);
}

SwarmState SwarmState::from_robots(const std::vector<RobotState>& robots) {
  const int n = static_cast<int>(robots.size());
  Eigen::VectorXd pos(2 * n), ori(n);
  for (int j = 0; j < n; ++j) {
    pos[2 * j] = robots[j].x;
    pos[2 * j + 1] = robots[j].y;
    ori[j] = robots[j].theta;
  }
  return SwarmState(std::move(pos), std::move(ori));
}

SwarmState SwarmState::from_vector(const Eigen::VectorXd& q) {
  if (q.size() % 3 != 0) throw std::invalid_argument("state size must be 3n");
  const Eigen::Index n = q.size() / 3;
  return SwarmState(q.head(2 * n), q.tail(n));
}

RobotState SwarmState::robot(int j) const {
  return RobotState{positions_[2 * j], positions_[2 * j + 1], orientations_[j]};
}

Eigen::VectorXd SwarmState::to_vector() const {
  Eigen::VectorXd q(positions_.size() + orientations_.size());
  q << positions_, orientations_;
  return q;
}

bool SwarmState::operator==(const SwarmState& other) const {
  return positions_ == other.positions_ && orientations_ == other.orientations_;
}

void Trajectory::append(const Trajectory& tail) {
  if (tail.num_states() == 0) return;
  if (states_.empty()) {
    states_ = tail.states_;
    return;
  }
  if (!(tail.state(0) == back()))
    throw std::invalid_argument("trajectory pieces do not chain");
  states_.insert(states_.end(), tail.states_.begin() + 1, tail.states_.end());
}

VectorField vector_field(const SwarmState& q, const ActivationVector& alpha,
                         const SwarmParams& params) {
  const int n = q.num_robots();
  if (alpha.size() != n)
    throw std::invalid_argument("activation vector length does not match state");
  VectorField f;
  f.position_part = Eigen::VectorXd::Zero(2 * n);
  f.orientation_part = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (alpha.active(j)) {
      const double th = q.orientation(j);
      f.position_part[2 * j] = std::cos(th);
      f.position_part[2 * j + 1] = std::sin(th);
    } else {
      f.orientation_part[j] = params.turn_gain;
    }
  }
  return f;
}

SwarmState step_discrete(const SwarmState& q, int group, double u,
                         const GroupAllocation& alloc,
                         const SwarmParams& params) {
  params.validate();
  if (q.num_robots() != alloc.num_robots() || params.n != alloc.num_robots())
    throw std::invalid_argument("state, allocation and params disagree on n");
  if (group < 0 || group >= alloc.num_groups())
    throw std::out_of_range("group index");
  if (u < 0.0 || u > params.input_bound)
    throw std::invalid_argument("input outside [0, input_bound]");

  const ActivationVector& alpha = alloc.row(group);
  Eigen::VectorXd pos = q.positions();
  Eigen::VectorXd ori = q.orientations();
  const double s = u * params.delta_t;
  for (int j = 0; j < q.num_robots(); ++j) {
    if (alpha.active(j)) {
      pos[2 * j] += s * std::cos(ori[j]);
      pos[2 * j + 1] += s * std::sin(ori[j]);
    } else {
      ori[j] = normalize_angle(ori[j] + params.turn_gain * s);
    }
  }
  return SwarmState(std::move(pos), std::move(ori));
}

Trajectory rollout(const SwarmState& q0, const ActivationSequence& nu,
                   const ControlSequence& u, const GroupAllocation& alloc,
                   const SwarmParams& params) {
  if (nu.size() != u.size())
    throw std::invalid_argument("activation and control sequences differ in length");
  std::vector<SwarmState> states;
  states.reserve(nu.size() + 1);
  states.push_back(q0);
  for (std::size_t i = 0; i < nu.size(); ++i)
    states.push_back(step_discrete(states.back(), nu[i], u[i], alloc, params));
  return Trajectory(std::move(states));
}

VectorField embedded_field(const SwarmState& q, const Eigen::VectorXd& mu,
                           const GroupAllocation& alloc,
                           const SwarmParams& params) {
  if (mu.size() != alloc.num_groups())
    throw std::invalid_argument("mu length does not match group count");
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu[i] < 0.0)
      throw std::invalid_argument("embedded inputs must be nonnegative");
  const int n = q.num_robots();
  VectorField out;
  out.position_part = Eigen::VectorXd::Zero(2 * n);
  out.orientation_part = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu[i] == 0.0) continue;
    VectorField f = vector_field(q, alloc.row(static_cast<int>(i)), params);
    out.position_part += mu[i] * f.position_part;
    out.orientation_part += mu[i] * f.orientation_part;
  }
  return out;
}

double travel_length(const Trajectory& traj) {
  if (traj.num_states() == 0)
    throw std::invalid_argument("travel length of an empty trajectory");
  double total = 0.0;
  for (int i = 0; i + 1 < traj.num_states(); ++i) {
    const Eigen::VectorXd& a = traj.state(i).positions();
    const Eigen::VectorXd& b = traj.state(i + 1).positions();
    for (Eigen::Index j = 0; 2 * j < a.size(); ++j)
      total += (b.segment<2>(2 * j) - a.segment<2>(2 * j)).norm();
  }
  return total;
}

}  // namespace microswarm
