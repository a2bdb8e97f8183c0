#include "gsa/sim3.hpp"

#include <cmath>
#include <numbers>

namespace gsa {

Quat canonical_quaternion(const Quat& q) {
  Quat out = q.normalized();
  bool flip = out.w() < 0.0;
  if (out.w() == 0.0) {
    for (int i = 0; i < 3; ++i) {
      if (out.vec()[i] != 0.0) {
        flip = out.vec()[i] < 0.0;
        break;
      }
    }
  }
  if (flip) out.coeffs() = -out.coeffs();
  return out;
}

Sim3::Sim3() = default;

Sim3::Sim3(double scale, const Quat& rotation, const Vec3& translation)
    : scale_(scale),
      rotation_(canonical_quaternion(rotation)),
      matrix_(rotation_.toRotationMatrix()),
      translation_(translation) {}

Sim3::Sim3(double scale, const Mat3& rotation, const Vec3& translation)
    : Sim3(scale, Quat(rotation), translation) {}

Sim3 Sim3::inverse() const {
  const double inv_scale = 1.0 / scale_;
  const Mat3 rt = matrix_.transpose();
  return Sim3(inv_scale, rotation_.conjugate(), -inv_scale * (rt * translation_));
}

Sim3 Sim3::operator*(const Sim3& b) const {
  return Sim3(scale_ * b.scale_, rotation_ * b.rotation_,
              scale_ * (matrix_ * b.translation_) + translation_);
}

Sim3 sim3_compose(const Sim3& a, const Sim3& b) { return a * b; }
Sim3 sim3_inverse(const Sim3& t) { return t.inverse(); }
Vec3 sim3_apply_point(const Sim3& t, const Vec3& p) { return t.apply(p); }

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_from_axis_angle(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    // second-order expansion; exact to machine precision at this size
    const Mat3 k = skew(omega);
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Vec3 axis_angle_from_rotation(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

Mat3 rotation_from_euler_xyz(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(rz, Vec3::UnitZ()) * Eigen::AngleAxisd(ry, Vec3::UnitY()) *
          Eigen::AngleAxisd(rx, Vec3::UnitX()))
      .toRotationMatrix();
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const Vec3 v(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double sin_part = 0.5 * v.norm();
  const double cos_part = 0.5 * (rel.trace() - 1.0);
  return std::atan2(sin_part, cos_part);
}

double sim3_distance_from_identity(const Sim3& t, double length_scale) {
  const double angle = rotation_angle_between(Mat3::Identity(), t.rotation());
  const double log_s = std::abs(std::log(t.scale()));
  const double trans = t.translation().norm() / length_scale;
  return std::max({angle, log_s, trans});
}

bool is_proper_rotation(const Mat3& r, double tol) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace gsa
