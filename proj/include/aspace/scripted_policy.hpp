#pragma once

// Hand-written goal-seeking policies, one per action space. They read the
// same feedback a learned policy would and emit actions in [-1, 1]; used to
// produce matched logs for gap measurements and as evaluation baselines.

#include "aspace/tasks.hpp"

namespace aspace {

/// Joint configuration whose end-effector reaches `goal`, by integrating the
/// damped IK velocity from `q0`.
inline Vec solve_ik_position(const RobotModel& m, const Vec& q0, const Vec3& goal,
                             int iterations = 400, double step = 0.05) {
  Vec q = q0;
  IkParams ik;
  ik.k_null = 0.2;
  for (int i = 0; i < iterations; ++i) {
    const Pose p = forward_kinematics(m, q);
    Twist xd;
    xd.linear = (goal - p.position) / step;
    // orientation is left free: only the null-space term acts on it
    const Mat j = jacobian(m, q);
    const Mat jp = j.topRows(3);
    const Mat pinv = damped_pinv(jp, ik.damping);
    const Mat proj = Mat::Identity(m.n_joints(), m.n_joints()) - pinv * jp;
    Vec dq = pinv * xd.linear + proj * (ik.k_null * (m.q_def - q));
    q = clamp(q + step * dq.cwiseMax(-m.dq_max * 20).cwiseMin(m.dq_max * 20), m.q_min, m.q_max);
  }
  return q;
}

struct ScriptGains {
  double joint_p = 2.0;      // 1/s, joint velocity toward q_goal
  double cart_p = 2.0;       // 1/s, Cartesian velocity toward the goal pose
  double torque_k = 150.0;   // N m/rad, JT proportional gain
  double torque_d = 25.0;    // N m s/rad
  double speed_fraction = 0.8;
};

class ScriptedPolicy {
 public:
  using Gains = ScriptGains;

  ScriptedPolicy(const ActionSpace& space, Vec q_goal, Gains g = {})
      : space_(&space), q_goal_(std::move(q_goal)), g_(g) {
    const Pose p = forward_kinematics(space.model(), q_goal_);
    x_goal_ = p;
  }

  const Vec& q_goal() const { return q_goal_; }

  Vec act(const ControllerState& st, const Feedback& fb) const {
    const RobotModel& m = space_->model();
    const Limits& lim = space_->limits();
    const Vec& q = fb.joints.q;
    const Vec& dq = fb.joints.dq;

    if (space_->base() == BaseSpace::JT) {
      const Vec tau = g_.torque_k * (q_goal_ - q) - g_.torque_d * dq + gravity_torque(m, q);
      return inverse_scale(tau, lim);
    }

    // the value the base variable should take next
    Vec target;
    switch (space_->base()) {
      case BaseSpace::JP: target = q_goal_; break;
      case BaseSpace::JV:
        target = clamp_symmetric(g_.joint_p * (q_goal_ - q), g_.speed_fraction * m.dq_max);
        break;
      case BaseSpace::CP: {
        target.resize(9);
        target << x_goal_.position, rotation_to_6d(x_goal_.rotation);
        break;
      }
      case BaseSpace::CV: {
        const Vec3 v = g_.cart_p * (x_goal_.position - fb.ee.position);
        const Vec3 w = g_.cart_p * orientation_error(x_goal_.rotation, fb.ee.rotation);
        target.resize(6);
        target << v, euler_rates_from_angular(fb.ee.rotation, w);
        target = clamp(target, g_.speed_fraction * lim.lo, g_.speed_fraction * lim.hi);
        break;
      }
      case BaseSpace::JT: break;
    }

    const DeltaConfig& dc = space_->config().delta;
    switch (space_->mode()) {
      case DeltaMode::None: return inverse_scale(target, lim);
      case DeltaMode::OneStep: {
        const Vec v = space_->feedback(fb);
        return ((target - v).array() / (dc.c.array() * dc.dt)).cwiseMax(-1.0).cwiseMin(1.0);
      }
      case DeltaMode::MultiStep:
        return ((target - st.v_d).array() / (dc.c.array() * dc.dt)).cwiseMax(-1.0).cwiseMin(1.0);
    }
    return Vec::Zero(space_->action_dim());
  }

  Vec act(const TaskEnv& env) const {
    const auto& r = env.rollout();
    return act(r.controller(), Feedback::from(space_->model(), r.state().joints));
  }

  /// a such that scale_action(a, lo, hi) = v (clipped to [-1, 1]).
  static Vec inverse_scale(const Vec& v, const Limits& lim) {
    const Vec a = (2.0 * (v - lim.lo).array() / (lim.hi - lim.lo).array() - 1.0).matrix();
    return a.cwiseMax(-1.0).cwiseMin(1.0);
  }

 private:
  const ActionSpace* space_;
  Vec q_goal_;
  Pose x_goal_;
  Gains g_;
};

/// Records one scripted episode toward `goal` in `env`.
inline Trajectory scripted_episode(TaskEnv& env, std::uint64_t seed, const Vec3& goal,
                                   ScriptGains gains = {}) {
  env.set_recording(true);
  env.reset_to(seed, goal);
  const Vec q_goal = solve_ik_position(env.model(), env.state().joints.q, goal);
  ScriptedPolicy pi(env.rollout().space(), q_goal, gains);
  while (!env.done()) env.step(pi.act(env));
  return env.trajectory();
}

}  // namespace aspace
