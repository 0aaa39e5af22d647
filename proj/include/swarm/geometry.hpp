#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace swarm {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

// Planar rotation about +z by `yaw`. Orthonormal with determinant +1.
inline Eigen::Matrix2d rotation_matrix(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Angle between the positive x-axis and the ray from `from` to `to`,
// in (-pi, pi]. Coincident points map to 0 by convention.
template <int Dim>
double bearing(const Vec<Dim>& from, const Vec<Dim>& to) {
  const double dx = to.x() - from.x();
  const double dy = to.y() - from.y();
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return std::atan2(dy, dx);
}

template <int Dim>
bool all_finite(const Vec<Dim>& v) {
  return v.allFinite();
}

}  // namespace swarm
