#pragma once

// Rigid-body dynamics of the serial chain.
//
// inverse_dynamics is a recursive Newton-Euler pass carried out in world
// coordinates. mass_matrix is assembled independently from the link
// centre-of-mass Jacobians, so the two routes can check each other.

#include "aspace/kinematics.hpp"

namespace aspace {

/// tau = M(q) ddq + C(q, dq) dq + g(q), with `gravity` the world gravity
/// vector. Armature contributes armature_i * ddq_i.
inline Vec inverse_dynamics(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                            const Eigen::Ref<const Vec>& dq,
                            const Eigen::Ref<const Vec>& ddq, const Vec3& gravity) {
  const int n = model.n_joints();
  require_size(dq, n, "inverse_dynamics dq");
  require_size(ddq, n, "inverse_dynamics ddq");
  const ChainFrames f = chain_frames(model, q);

  std::vector<Vec3> force(n), moment(n), com(n);
  Vec3 w = Vec3::Zero();
  Vec3 wd = Vec3::Zero();
  Vec3 acc_origin = -gravity;  // base accelerates upward instead of gravity
  Vec3 prev_origin = Vec3::Zero();

  for (int i = 0; i < n; ++i) {
    const Vec3 o = f.origin(i);
    const Vec3 z = f.axis(model, i);
    const Vec3 r = o - prev_origin;
    // origin of joint i is fixed in link i-1
    acc_origin = acc_origin + wd.cross(r) + w.cross(w.cross(r));
    const Vec3 w_next = w + z * dq[i];
    wd = wd + z * ddq[i] + w.cross(z * dq[i]);
    w = w_next;

    const auto& link = model.links[i];
    const Mat3 rot = f.joint[i].linear();
    com[i] = f.joint[i] * link.com;
    const Vec3 rc = com[i] - o;
    const Vec3 acc_com = acc_origin + wd.cross(rc) + w.cross(w.cross(rc));
    const Mat3 inertia = rot * link.inertia * rot.transpose();
    force[i] = link.mass * acc_com;
    moment[i] = inertia * wd + w.cross(inertia * w);
    prev_origin = o;
  }

  Vec tau(n);
  Vec3 f_child = Vec3::Zero();
  Vec3 n_child = Vec3::Zero();  // about the child's joint origin
  for (int i = n - 1; i >= 0; --i) {
    const Vec3 o = f.origin(i);
    Vec3 n_i = moment[i] + (com[i] - o).cross(force[i]) + n_child;
    if (i + 1 < n) n_i += (f.origin(i + 1) - o).cross(f_child);
    const Vec3 f_i = force[i] + f_child;
    tau[i] = f.axis(model, i).dot(n_i) + model.armature[i] * ddq[i];
    f_child = f_i;
    n_child = n_i;
  }
  return tau;
}

inline Vec gravity_torque(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                          const Vec3& gravity) {
  const Vec zero = Vec::Zero(model.n_joints());
  return inverse_dynamics(model, q, zero, zero, gravity);
}

inline Vec gravity_torque(const RobotModel& model, const Eigen::Ref<const Vec>& q) {
  return gravity_torque(model, q, model.gravity);
}

/// Coriolis, centrifugal, and gravity terms: tau needed for ddq = 0.
inline Vec bias_torque(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                       const Eigen::Ref<const Vec>& dq, const Vec3& gravity) {
  return inverse_dynamics(model, q, dq, Vec::Zero(model.n_joints()), gravity);
}

/// Joint-space inertia from centre-of-mass Jacobians:
///   M = sum_k m_k Jv_k^T Jv_k + Jw_k^T I_k Jw_k  + diag(armature).
inline Mat mass_matrix(const RobotModel& model, const Eigen::Ref<const Vec>& q) {
  const int n = model.n_joints();
  const ChainFrames f = chain_frames(model, q);
  Mat m = Mat::Zero(n, n);
  Mat jv(3, n), jw(3, n);
  for (int k = 0; k < n; ++k) {
    const auto& link = model.links[k];
    const Vec3 c = f.joint[k] * link.com;
    jv.setZero();
    jw.setZero();
    for (int i = 0; i <= k; ++i) {
      const Vec3 a = f.axis(model, i);
      jv.col(i) = a.cross(c - f.origin(i));
      jw.col(i) = a;
    }
    const Mat3 rot = f.joint[k].linear();
    const Mat3 inertia = rot * link.inertia * rot.transpose();
    m += link.mass * jv.transpose() * jv + jw.transpose() * inertia * jw;
  }
  m.diagonal() += model.armature;
  return 0.5 * (m + m.transpose());
}

/// ddq solving M ddq = tau - bias(q, dq).
inline Vec forward_dynamics(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                            const Eigen::Ref<const Vec>& dq,
                            const Eigen::Ref<const Vec>& tau, const Vec3& gravity) {
  require_size(tau, model.n_joints(), "forward_dynamics tau");
  const Mat m = mass_matrix(model, q);
  return m.ldlt().solve(tau - bias_torque(model, q, dq, gravity));
}

inline double potential_energy(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                               const Vec3& gravity) {
  const ChainFrames f = chain_frames(model, q);
  double u = 0.0;
  for (int k = 0; k < model.n_joints(); ++k) {
    u -= model.links[k].mass * gravity.dot(f.joint[k] * model.links[k].com);
  }
  return u;
}

inline double kinetic_energy(const RobotModel& model, const Eigen::Ref<const Vec>& q,
                             const Eigen::Ref<const Vec>& dq) {
  return 0.5 * dq.dot(mass_matrix(model, q) * dq);
}

}  // namespace aspace
