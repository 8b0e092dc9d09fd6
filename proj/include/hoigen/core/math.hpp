#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hoigen {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// First two columns of a rotation matrix, column-major: (c0.x, c0.y, c0.z, c1.x, c1.y, c1.z).
using Rot6d = std::array<double, 6>;

/// Per-frame contact probabilities, order (left hand, right hand, left foot, right foot).
using Contact4 = std::array<double, 4>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace hoigen
