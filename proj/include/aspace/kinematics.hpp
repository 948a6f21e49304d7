#pragma once

#include <vector>

#include "aspace/robot_model.hpp"

namespace aspace {

/// World-frame transforms of every joint frame (after the joint rotation)
/// plus the tool frame.
struct ChainFrames {
  std::vector<Eigen::Isometry3d> joint;
  Eigen::Isometry3d ee = Eigen::Isometry3d::Identity();

  /// World-frame rotation axis of joint i.
  Vec3 axis(const RobotModel& m, int i) const { return joint[i].linear() * m.joints[i].axis; }
  Vec3 origin(int i) const { return joint[i].translation(); }
};

inline ChainFrames chain_frames(const RobotModel& model, const Eigen::Ref<const Vec>& q) {
  const int n = model.n_joints();
  require_size(q, n, "chain_frames q");
  ChainFrames f;
  f.joint.resize(n);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int i = 0; i < n; ++i) {
    const auto& s = model.joints[i];
    Eigen::Isometry3d fixed = Eigen::Isometry3d::Identity();
    fixed.translation() = s.origin_xyz;
    fixed.linear() = s.origin_rot;
    t = t * fixed;
    t.rotate(Eigen::AngleAxisd(q[i], s.axis));
    f.joint[i] = t;
  }
  f.ee = t * model.tool;
  return f;
}

inline Pose forward_kinematics(const RobotModel& model, const Eigen::Ref<const Vec>& q) {
  const auto f = chain_frames(model, q);
  return Pose{f.ee.translation(), f.ee.linear()};
}

inline Mat jacobian_from_frames(const RobotModel& model, const ChainFrames& f) {
  const int n = model.n_joints();
  Mat jac(6, n);
  const Vec3 p = f.ee.translation();
  for (int i = 0; i < n; ++i) {
    const Vec3 a = f.axis(model, i);
    jac.block<3, 1>(0, i) = a.cross(p - f.origin(i));
    jac.block<3, 1>(3, i) = a;
  }
  return jac;
}

/// Geometric Jacobian: rows 0-2 map dq to the end-effector linear velocity,
/// rows 3-5 to its angular velocity, both in the world frame.
inline Mat jacobian(const RobotModel& model, const Eigen::Ref<const Vec>& q) {
  return jacobian_from_frames(model, chain_frames(model, q));
}

inline Twist ee_twist(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                      const Eigen::Ref<const Vec>& dq) {
  require_size(dq, model.n_joints(), "ee_twist dq");
  return Twist::from_stacked(jacobian(model, q) * dq);
}

/// Damped least-squares pseudoinverse J^T (J J^T + damping^2 I)^-1.
/// With damping == 0 this falls back to the Moore-Penrose pseudoinverse.
inline Mat damped_pinv(const Mat& jac, double damping) {
  if (damping <= 0.0) {
    return jac.completeOrthogonalDecomposition().pseudoInverse();
  }
  const Eigen::Index rows = jac.rows();
  Mat jjt = jac * jac.transpose();
  jjt.diagonal().array() += damping * damping;
  return jac.transpose() * jjt.ldlt().solve(Mat::Identity(rows, rows));
}

struct IkParams {
  double damping = 1e-2;
  double k_null = 1.0;  // 1/s
};

/// Velocity-level IK with a null-space pull toward q_def:
///   dq = J+ xd + (I - J+ J) k_null (q_def - q), clipped to +-dq_max.
inline Vec ik_velocity(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                       const Twist& xd_dot, const IkParams& p = {}) {
  if (p.damping < 0 || p.k_null < 0) {
    throw std::invalid_argument("ik_velocity: damping and k_null must be >= 0");
  }
  const int n = model.n_joints();
  const Mat jac = jacobian(model, q);
  const Mat jp = damped_pinv(jac, p.damping);
  Vec dq = jp * xd_dot.stacked();
  if (p.k_null > 0) {
    const Mat null_proj = Mat::Identity(n, n) - jp * jac;
    dq += null_proj * (p.k_null * (model.q_def - q));
  }
  return clamp_symmetric(dq, model.dq_max);
}

}  // namespace aspace
