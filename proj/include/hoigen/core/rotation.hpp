#pragma once

#include "hoigen/core/math.hpp"

namespace hoigen {

/// Decodes a 6-DOF rotation: normalize column 1, Gram-Schmidt column 2, cross product for column 3.
/// Throws DegenerateRotationError if either column collapses.
Mat3 rot6d_to_matrix(const Rot6d& r);

/// First two columns of R. Throws ValidationError if R is not orthonormal within 1e-6.
Rot6d matrix_to_rot6d(const Mat3& r);

/// a * b^T: the rotation taking b to a.
Mat3 rotation_difference(const Mat3& a, const Mat3& b);

/// Geodesic angle of a rotation matrix in [0, pi].
double rotation_angle(const Mat3& r);

/// Axis-angle vector (axis * angle) of a rotation matrix.
Vec3 rotation_log(const Mat3& r);

bool is_rotation(const Mat3& r, double tol = 1e-6);

/// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
Mat3 project_to_rotation(const Mat3& m);

/// Spherical interpolation between two rotations, t in [0, 1].
Mat3 slerp(const Mat3& a, const Mat3& b, double t);

Mat3 axis_angle(const Vec3& axis, double angle);

}  // namespace hoigen
