#pragma once

// Closed-loop execution of an action space in a world, one controller step
// at a time. The same engine drives training, evaluation, and open-loop
// replay, so replaying a logged action sequence in an identical world
// reproduces the log bit for bit.

#include <deque>
#include <optional>

#include <json.hpp>

#include "aspace/action_space.hpp"
#include "aspace/world.hpp"

namespace aspace {

/// Differences between the controller's model and the world it drives.
/// The identity profile makes the world exactly the nominal simulator.
struct Perturbation {
  double mass_scale = 1.0;      // link masses and inertias
  double friction_scale = 1.0;  // box/table friction
  int control_delay_steps = 0;  // controller steps between command and actuation

  bool is_identity() const {
    return mass_scale == 1.0 && friction_scale == 1.0 && control_delay_steps == 0;
  }
  void validate() const {
    if (!(mass_scale > 0)) throw std::invalid_argument("mass_scale must be > 0");
    if (!(friction_scale >= 0)) throw std::invalid_argument("friction_scale must be >= 0");
    if (control_delay_steps < 0) throw std::invalid_argument("control_delay_steps must be >= 0");
  }

  /// The standard pseudo-real profile: heavier links, stickier box, one
  /// step of actuation latency.
  static Perturbation standard() { return Perturbation{1.2, 1.3, 1}; }
};

inline nlohmann::json to_json(const Perturbation& p) {
  return {{"mass_scale", p.mass_scale},
          {"friction_scale", p.friction_scale},
          {"control_delay_steps", p.control_delay_steps}};
}

inline Perturbation perturbation_from_json(const nlohmann::json& j) {
  Perturbation p;
  p.mass_scale = j.value("mass_scale", 1.0);
  p.friction_scale = j.value("friction_scale", 1.0);
  p.control_delay_steps = j.value("control_delay_steps", 0);
  p.validate();
  return p;
}

/// What happened during one controller step.
struct ControlStep {
  int substep = 0;  // 0 on the step where the policy action was applied
  Vec a;            // policy action held during this step
  Vec v_d;          // control target in effect
  Vec v;            // base-space feedback measured before the step
  Vec tau;          // commanded torque
  WorldState after;
  Vec3 ee = Vec3::Zero();  // end-effector position after the step
};

class Rollout {
 public:
  Rollout(const RobotModel& controller_model, const ActionSpaceConfig& cfg,
          const Perturbation& p = {}, WorldConfig wc = {})
      : space_(controller_model, cfg),
        world_(with_mass_scale(controller_model, p.mass_scale), wc),
        perturbation_(p) {
    p.validate();
  }

  const ActionSpace& space() const { return space_; }
  const World& world() const { return world_; }
  const Perturbation& perturbation() const { return perturbation_; }
  const WorldState& state() const { return state_; }
  const ControllerState& controller() const { return ctl_; }
  const std::optional<BoxParams>& box() const { return box_; }

  /// Starts an episode. `box` is the nominal box; the world sees it with the
  /// friction perturbation applied.
  void reset(const WorldState& s0, std::optional<BoxParams> box = std::nullopt) {
    state_ = s0;
    box_ = box;
    if (box_) {
      box_->friction_coeff *= perturbation_.friction_scale;
      box_->validate();
    }
    const Feedback fb = Feedback::from(space_.model(), state_.joints);
    space_.reset(ctl_, fb);
    applied_tau_ = Vec::Zero(space_.model().n_joints());
    delay_.clear();
    // the arm holds its posture until the first delayed command arrives
    const Vec hold = gravity_torque(world_.model(), state_.joints.q);
    for (int i = 0; i < perturbation_.control_delay_steps; ++i) delay_.push_back(hold);
  }

  /// Base-space feedback; for JT it is the torque applied on the last step.
  Vec feedback(const Feedback& fb) const {
    return space_.base() == BaseSpace::JT ? applied_tau_ : space_.feedback(fb);
  }

  ControlStep step(const Vec& a) {
    ControlStep out;
    const Feedback fb = Feedback::from(space_.model(), state_.joints);
    out.substep = ctl_.substep;
    out.v = feedback(fb);
    out.a = a;
    out.tau = space_.compute_torque(ctl_, a, fb);
    out.v_d = ctl_.v_d;

    delay_.push_back(out.tau);
    const Vec applied = delay_.front();
    delay_.pop_front();
    applied_tau_ = applied;

    state_ = world_.step(state_, applied, box_ ? &*box_ : nullptr);
    out.after = state_;
    out.ee = forward_kinematics(world_.model(), state_.joints.q).position;
    return out;
  }

 private:
  ActionSpace space_;
  World world_;
  Perturbation perturbation_;
  ControllerState ctl_;
  WorldState state_;
  std::optional<BoxParams> box_;
  Vec applied_tau_;
  std::deque<Vec> delay_;
};

}  // namespace aspace
