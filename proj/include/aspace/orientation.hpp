#pragma once

// Orientation representations used by the Cartesian action spaces.
//
//  * 6D: the first two columns of a rotation matrix, stacked (c0; c1).
//    Recovery runs Gram-Schmidt on the two columns and completes the frame
//    with a cross product, so any non-degenerate 6-vector maps to SO(3).
//  * Euler: intrinsic X-Y-Z angles (roll, pitch, yaw) with
//    R = Rx(roll) * Ry(pitch) * Rz(yaw).

#include "aspace/common.hpp"

namespace aspace {

using Vec6D = Eigen::Matrix<double, 6, 1>;

inline Vec6D rotation_to_6d(const Mat3& r) {
  Vec6D out;
  out << r.col(0), r.col(1);
  return out;
}

/// Gram-Schmidt recovery. Throws when the two columns are (near) parallel or
/// zero, which has no meaningful orthonormalisation.
inline Mat3 rotation_from_6d(const Eigen::Ref<const Vec>& six) {
  require_size(six, 6, "rotation_from_6d");
  Vec3 a = six.segment<3>(0);
  Vec3 b = six.segment<3>(3);
  const double na = a.norm();
  if (na < 1e-12) throw std::invalid_argument("rotation_from_6d: zero first column");
  Vec3 c0 = a / na;
  Vec3 u = b - c0.dot(b) * c0;
  const double nu = u.norm();
  if (nu < 1e-12) {
    throw std::invalid_argument("rotation_from_6d: columns are parallel");
  }
  Vec3 c1 = u / nu;
  Mat3 r;
  r.col(0) = c0;
  r.col(1) = c1;
  r.col(2) = c0.cross(c1);
  return r;
}

inline Mat3 rot_x(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rot_y(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rot_z(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
}

inline Mat3 euler_xyz_to_rotation(const Vec3& e) {
  return rot_x(e.x()) * rot_y(e.y()) * rot_z(e.z());
}

struct EulerResult {
  Vec3 angles = Vec3::Zero();
  /// True when |cos(pitch)| fell below the threshold; roll and yaw are then
  /// not separable and yaw is pinned to zero.
  bool gimbal_lock = false;
};

inline EulerResult rotation_to_euler_xyz(const Mat3& r,
                                         double lock_threshold = 1e-9) {
  // R = Rx(a) Ry(b) Rz(c):
  //   r02 = sin b
  //   r12 = -sin a cos b,  r22 = cos a cos b
  //   r01 = -cos b sin c,  r00 = cos b cos c
  EulerResult out;
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double cb = std::sqrt(std::max(0.0, 1.0 - sb * sb));
  out.angles.y() = std::atan2(sb, cb);
  if (cb > lock_threshold) {
    out.angles.x() = std::atan2(-r(1, 2), r(2, 2));
    out.angles.z() = std::atan2(-r(0, 1), r(0, 0));
  } else {
    // Fallback branch: only roll +/- yaw is observable. With yaw = 0,
    // r10 = sin a and r11 = cos a.
    out.gimbal_lock = true;
    out.angles.x() = std::atan2(r(1, 0), r(1, 1));
    out.angles.z() = 0.0;
  }
  return out;
}

/// Maps intrinsic XYZ Euler-angle rates to the world-frame angular velocity:
/// omega = E(angles) * rates.
inline Mat3 euler_xyz_rate_matrix(const Vec3& e) {
  Mat3 m;
  const Mat3 rx = rot_x(e.x());
  const Mat3 rxy = rx * rot_y(e.y());
  m.col(0) = Vec3::UnitX();
  m.col(1) = rx * Vec3::UnitY();
  m.col(2) = rxy * Vec3::UnitZ();
  return m;
}

/// Rotation vector (axis * angle) of R, the SO(3) log map.
inline Vec3 rotation_log(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  double angle = aa.angle();
  if (angle > kPi) angle -= 2.0 * kPi;
  return aa.axis() * angle;
}

/// World-frame orientation error whose exponential takes `current` to
/// `desired`: log(desired * current^T).
inline Vec3 orientation_error(const Mat3& desired, const Mat3& current) {
  return rotation_log(desired * current.transpose());
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
         std::abs(r.determinant() - 1.0) < tol;
}

}  // namespace aspace
