#pragma once

// Arm + box world stepped at the controller rate.
//
// The arm integrates M(q) ddq = tau - bias + J^T w_ext with semi-implicit
// Euler. The box slides on the table plane (z fixed) and is pushed by a
// spherical end-effector tip through a penalty contact.

#include <optional>
#include <utility>

#include "aspace/dynamics.hpp"

namespace aspace {

struct BoxParams {
  double mass = 0.5;
  double friction_coeff = 0.3;  // table Coulomb coefficient
  Vec3 half_extents = Vec3(0.05, 0.05, 0.05);

  void validate() const {
    if (!(mass > 0)) throw std::invalid_argument("box mass must be > 0");
    if (!(friction_coeff >= 0)) throw std::invalid_argument("box friction must be >= 0");
    if ((half_extents.array() <= 0).any()) throw std::invalid_argument("box extents must be > 0");
  }
};

/// Planar box pose and twist on the table.
struct BoxState {
  double x = 0.5, y = 0.0, yaw = 0.0;
  double vx = 0.0, vy = 0.0, wz = 0.0;
};

struct WorldState {
  JointState joints;
  BoxState box;
  long step_index = 0;

  double time(double dt = 1.0 / kControlRate) const { return step_index * dt; }
};

struct ContactParams {
  double stiffness = 5000.0;   // N/m
  double damping = 50.0;       // N s/m
  double tip_radius = 0.02;    // m
  double tip_friction = 0.3;   // tip/box and tip/table Coulomb cap
  double table_height = 0.0;   // z of the table surface
  bool table_contact = true;   // tip vs table half-space
};

struct WorldConfig {
  double dt = 1.0 / kControlRate;
  ContactParams contact;
};

/// One arm step. `external` is a wrench (force; torque) acting at the
/// end-effector point, expressed in the world frame.
inline WorldState forward_step(const RobotModel& model, const WorldConfig& cfg,
                               const WorldState& state, const Eigen::Ref<const Vec>& tau,
                               const std::optional<Vec6>& external = std::nullopt) {
  const int n = model.n_joints();
  require_size(tau, n, "forward_step tau");
  if (!tau.allFinite()) throw std::invalid_argument("forward_step: non-finite torque");
  const Vec& q = state.joints.q;
  const Vec& dq = state.joints.dq;

  Vec applied = tau;
  if (external) {
    if (!external->allFinite()) throw std::invalid_argument("forward_step: non-finite wrench");
    applied += jacobian(model, q).transpose() * (*external);
  }
  const Vec ddq = forward_dynamics(model, q, dq, applied, model.gravity);

  WorldState next = state;
  Vec dq_next = dq + cfg.dt * ddq;
  Vec q_next = q + cfg.dt * dq_next;
  for (int i = 0; i < n; ++i) {
    if (q_next[i] > model.q_max[i]) {
      q_next[i] = model.q_max[i];
      dq_next[i] = std::min(dq_next[i], 0.0);
    } else if (q_next[i] < model.q_min[i]) {
      q_next[i] = model.q_min[i];
      dq_next[i] = std::max(dq_next[i], 0.0);
    }
  }
  next.joints.q = std::move(q_next);
  next.joints.dq = std::move(dq_next);
  next.step_index = state.step_index + 1;
  return next;
}

struct ContactResult {
  WorldState state;
  Vec6 ee_wrench = Vec6::Zero();  // reaction on the arm tip
  double box_normal_force = 0.0;  // tip/box normal magnitude
};

namespace detail {

/// Penalty force on a sphere from a surface with outward normal `normal`.
inline Vec3 penalty_force(const ContactParams& cp, double penetration, const Vec3& normal,
                          const Vec3& rel_vel, double* normal_out = nullptr) {
  const double vn = rel_vel.dot(normal);
  const double fn = std::max(0.0, cp.stiffness * penetration - cp.damping * vn);
  if (normal_out) *normal_out = fn;
  Vec3 f = fn * normal;
  const Vec3 vt = rel_vel - vn * normal;
  const double vt_norm = vt.norm();
  if (vt_norm > 1e-12 && fn > 0) {
    const double ft = std::min(cp.tip_friction * fn, cp.damping * vt_norm);
    f -= ft * vt / vt_norm;
  }
  return f;
}

inline double box_yaw_inertia(const BoxParams& box) {
  const double a = box.half_extents.x(), b = box.half_extents.y();
  return box.mass * (a * a + b * b) / 3.0;
}

}  // namespace detail

/// Tip/box (and tip/table) penalty contact followed by the planar box update.
/// Returns the new box state inside `state` and the reaction wrench on the
/// arm, to be passed to forward_step.
inline ContactResult contact_step(const WorldConfig& cfg, const WorldState& state,
                                  const BoxParams& box, const Pose& ee, const Twist& ee_vel) {
  const ContactParams& cp = cfg.contact;
  const double g = 9.81;
  ContactResult out{state, Vec6::Zero(), 0.0};
  BoxState b = state.box;

  const Vec3 center(b.x, b.y, cp.table_height + box.half_extents.z());
  const Mat3 rot = rot_z(b.yaw);
  const Vec3 local = rot.transpose() * (ee.position - center);
  const Vec3 closest_local = local.cwiseMax(-box.half_extents).cwiseMin(box.half_extents);
  Vec3 normal_local;
  double penetration;
  const Vec3 d = local - closest_local;
  const double dist = d.norm();
  if (dist > 1e-12) {
    normal_local = d / dist;
    penetration = cp.tip_radius - dist;
  } else {
    // tip centre inside the box: push out through the nearest face
    const Vec3 gap = box.half_extents - local.cwiseAbs();
    Eigen::Index axis;
    gap.minCoeff(&axis);
    normal_local = Vec3::Zero();
    normal_local[axis] = local[axis] >= 0 ? 1.0 : -1.0;
    penetration = cp.tip_radius + gap[axis];
  }

  Vec3 f_tip = Vec3::Zero();
  Vec3 f_box = Vec3::Zero();
  double torque_box = 0.0;
  if (penetration > 0) {
    const Vec3 normal = rot * normal_local;
    const Vec3 contact_pt = center + rot * closest_local;
    const Vec3 r = contact_pt - center;
    const Vec3 box_pt_vel(b.vx - b.wz * r.y(), b.vy + b.wz * r.x(), 0.0);
    const Vec3 rel = ee_vel.linear - box_pt_vel;
    double fn = 0.0;
    const Vec3 f = detail::penalty_force(cp, penetration, normal, rel, &fn);
    out.box_normal_force = fn;
    f_tip += f;
    f_box = -f;
    torque_box = r.x() * f_box.y() - r.y() * f_box.x();
  }
  if (cp.table_contact) {
    const double pen_table = cp.tip_radius - (ee.position.z() - cp.table_height);
    if (pen_table > 0) {
      f_tip += detail::penalty_force(cp, pen_table, Vec3::UnitZ(), ee_vel.linear);
    }
  }

  // Planar box dynamics: applied force first, then Coulomb table friction
  // that can stop but never reverse the motion.
  const double dt = cfg.dt;
  const double normal_table = std::max(0.0, box.mass * g - f_box.z());
  const double inertia = detail::box_yaw_inertia(box);
  b.vx += dt * f_box.x() / box.mass;
  b.vy += dt * f_box.y() / box.mass;
  b.wz += dt * torque_box / inertia;
  const double speed = std::hypot(b.vx, b.vy);
  const double dv = dt * box.friction_coeff * normal_table / box.mass;
  if (speed <= dv) {
    b.vx = b.vy = 0.0;
  } else {
    b.vx -= dv * b.vx / speed;
    b.vy -= dv * b.vy / speed;
  }
  const double r_fric = (2.0 / 3.0) * 0.5 * (box.half_extents.x() + box.half_extents.y());
  const double dw = dt * box.friction_coeff * normal_table * r_fric / inertia;
  if (std::abs(b.wz) <= dw) {
    b.wz = 0.0;
  } else {
    b.wz -= std::copysign(dw, b.wz);
  }
  b.x += dt * b.vx;
  b.y += dt * b.vy;
  b.yaw += dt * b.wz;

  out.state.box = b;
  out.ee_wrench.head<3>() = f_tip;
  return out;
}

/// Arm + box world. The dynamics model may differ from the controller's
/// model (pseudo-real replay).
class World {
 public:
  World(RobotModel dynamics_model, WorldConfig cfg = {})
      : model_(std::move(dynamics_model)), cfg_(cfg) {
    model_.validate();
  }

  const RobotModel& model() const { return model_; }
  const WorldConfig& config() const { return cfg_; }

  /// One controller-rate step; with a box the contact is resolved first.
  WorldState step(const WorldState& s, const Vec& tau, const BoxParams* box = nullptr) const {
    if (!box) return forward_step(model_, cfg_, s, tau);
    const ChainFrames f = chain_frames(model_, s.joints.q);
    const Pose ee{f.ee.translation(), f.ee.linear()};
    const Twist vel = Twist::from_stacked(jacobian_from_frames(model_, f) * s.joints.dq);
    ContactResult c = contact_step(cfg_, s, *box, ee, vel);
    return forward_step(model_, cfg_, c.state, tau, c.ee_wrench);
  }

 private:
  RobotModel model_;
  WorldConfig cfg_;
};

}  // namespace aspace
