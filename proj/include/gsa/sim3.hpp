#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gsa {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Similarity transform p -> s * R * p + t.
///
/// The rotation is kept as a unit quaternion with non-negative scalar part so
/// that two equal rotations always serialize to the same four numbers. The
/// matrix form is cached at construction; instances are immutable.
class Sim3 {
 public:
  Sim3();
  Sim3(double scale, const Quat& rotation, const Vec3& translation);
  Sim3(double scale, const Mat3& rotation, const Vec3& translation);

  static Sim3 identity() { return Sim3(); }

  double scale() const { return scale_; }
  const Quat& quaternion() const { return rotation_; }
  const Mat3& rotation() const { return matrix_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return scale_ * (matrix_ * p) + translation_; }

  Sim3 inverse() const;

  /// Composition: (a * b)(p) == a(b(p)).
  Sim3 operator*(const Sim3& b) const;

 private:
  double scale_ = 1.0;
  Quat rotation_ = Quat::Identity();
  Mat3 matrix_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

Sim3 sim3_compose(const Sim3& a, const Sim3& b);
Sim3 sim3_inverse(const Sim3& t);
Vec3 sim3_apply_point(const Sim3& t, const Vec3& p);

/// Unit quaternion with w >= 0; for w == 0 the first non-zero vector
/// component is made positive.
Quat canonical_quaternion(const Quat& q);

Mat3 skew(const Vec3& v);
Mat3 rotation_from_axis_angle(const Vec3& omega);
Vec3 axis_angle_from_rotation(const Mat3& r);

/// Rotation about x, then y, then z (R = Rz * Ry * Rx), angles in radians.
Mat3 rotation_from_euler_xyz(double rx, double ry, double rz);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Geodesic angle (radians) of R_a^T R_b. Uses atan2 so that angles near zero
/// keep full double precision, unlike an arccos of the trace.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Largest of: rotation angle (rad), |log s|, |t| / length_scale.
double sim3_distance_from_identity(const Sim3& t, double length_scale);

bool is_proper_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace gsa
