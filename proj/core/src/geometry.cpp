#include "microswarm/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace microswarm {

CircleFit fit_circle(const std::vector<Eigen::Vector2d>& points) {
  if (points.size() < 3)
    throw std::invalid_argument("circle fit needs at least 3 points");

  // Solve |p|^2 = 2 c.p + (r^2 - |c|^2) in least squares for (c, rho).
  Eigen::MatrixXd a(points.size(), 3);
  Eigen::VectorXd b(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    a(i, 0) = 2.0 * points[i].x();
    a(i, 1) = 2.0 * points[i].y();
    a(i, 2) = 1.0;
    b(i) = points[i].squaredNorm();
  }
  const Eigen::Vector3d sol =
      (a.transpose() * a).ldlt().solve(a.transpose() * b);

  CircleFit fit;
  fit.center = sol.head<2>();
  const double r2 = sol[2] + fit.center.squaredNorm();
  fit.radius = r2 > 0.0 ? std::sqrt(r2) : 0.0;

  double sq_sum = 0.0;
  for (const auto& p : points) {
    const double d = (p - fit.center).norm() - fit.radius;
    sq_sum += d * d;
  }
  fit.rms_residual = std::sqrt(sq_sum / static_cast<double>(points.size()));
  return fit;
}

}  // namespace microswarm
