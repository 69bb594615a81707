#pragma once

#include <Eigen/Core>
#include <vector>

namespace microswarm {

struct CircleFit {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  /// Root-mean-square radial deviation of the points from the circle.
  double rms_residual = 0.0;
};

/// Algebraic least-squares circle through a point set (Kasa fit),
/// followed by a residual evaluation. Needs at least three points.
CircleFit fit_circle(const std::vector<Eigen::Vector2d>& points);

}  // namespace microswarm
