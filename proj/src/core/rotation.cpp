#include "hoigen/core/rotation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "hoigen/core/error.hpp"

namespace hoigen {
namespace {
constexpr double kDegenerateNorm = 1e-12;
}

Mat3 rot6d_to_matrix(const Rot6d& r) {
  const Vec3 a(r[0], r[1], r[2]);
  const Vec3 b(r[3], r[4], r[5]);
  const double na = a.norm();
  if (!(na > kDegenerateNorm)) throw DegenerateRotationError("rot6d: first column has zero norm");
  const Vec3 c0 = a / na;
  const Vec3 residual = b - c0.dot(b) * c0;
  const double nr = residual.norm();
  if (!(nr > kDegenerateNorm)) throw DegenerateRotationError("rot6d: columns are parallel or second column is zero");
  const Vec3 c1 = residual / nr;
  Mat3 m;
  m.col(0) = c0;
  m.col(1) = c1;
  m.col(2) = c0.cross(c1);
  return m;
}

Rot6d matrix_to_rot6d(const Mat3& r) {
  if (!is_rotation(r)) throw ValidationError("matrix_to_rot6d: matrix is not a rotation");
  return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

Mat3 rotation_difference(const Mat3& a, const Mat3& b) { return a * b.transpose(); }

double rotation_angle(const Mat3& r) {
  // atan2 keeps full precision near the identity, where acos of the trace loses half the digits.
  const Vec3 s(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * s.norm(), 0.5 * (r.trace() - 1.0));
}

Vec3 rotation_log(const Mat3& r) {
  // AngleAxis handles the near-pi branch through the quaternion.
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(r).normalized());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > kPi) {
    angle = 2.0 * kPi - angle;
    axis = -axis;
  }
  return axis * angle;
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 project_to_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Mat3 slerp(const Mat3& a, const Mat3& b, double t) {
  const Eigen::Quaterniond qa(a);
  const Eigen::Quaterniond qb(b);
  return qa.normalized().slerp(t, qb.normalized()).toRotationMatrix();
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace hoigen
