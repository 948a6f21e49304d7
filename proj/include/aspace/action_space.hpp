#pragma once

// The 13 action spaces. A policy action a in [-1, 1]^m is turned into joint
// torques by a controller that depends on the space:
//
//   JT            tau = s(a) over +-tau_max
//   JP, JV        joint impedance control (JIC) on (q_d, dq_d)
//   CP, CV        Cartesian targets -> damped IK -> joint velocities -> JIC
//   OI-*, MI-*    delta variants: v_d = clip(ref + c a dt), with ref the live
//                 feedback (one-step integrator) or the previous target
//                 (multi-step integrator)
//
// Targets are updated once per policy step (60 Hz); torques are produced at
// the controller rate (120 Hz) with the action held in between.

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "aspace/dynamics.hpp"
#include "aspace/safety.hpp"

namespace aspace {

enum class ActionSpaceKind {
  JT,
  JP, OI_JP, MI_JP,
  JV, OI_JV, MI_JV,
  CP, OI_CP, MI_CP,
  CV, OI_CV, MI_CV,
};

enum class BaseSpace { JT, JP, JV, CP, CV };
enum class DeltaMode { None, OneStep, MultiStep };

inline constexpr std::array<ActionSpaceKind, 13> kAllKinds = {
    ActionSpaceKind::JP, ActionSpaceKind::OI_JP, ActionSpaceKind::MI_JP,
    ActionSpaceKind::JV, ActionSpaceKind::OI_JV, ActionSpaceKind::MI_JV,
    ActionSpaceKind::JT,
    ActionSpaceKind::CP, ActionSpaceKind::OI_CP, ActionSpaceKind::MI_CP,
    ActionSpaceKind::CV, ActionSpaceKind::OI_CV, ActionSpaceKind::MI_CV};

namespace detail {
struct KindInfo {
  ActionSpaceKind kind;
  std::string_view name;   // CLI / config spelling
  std::string_view label;  // report spelling
  BaseSpace base;
  DeltaMode mode;
};

inline constexpr std::array<KindInfo, 13> kKindTable = {{
    {ActionSpaceKind::JT, "jt", "JT", BaseSpace::JT, DeltaMode::None},
    {ActionSpaceKind::JP, "jp", "JP", BaseSpace::JP, DeltaMode::None},
    {ActionSpaceKind::OI_JP, "oi-jp", "OI\xCE\x94JP", BaseSpace::JP, DeltaMode::OneStep},
    {ActionSpaceKind::MI_JP, "mi-jp", "MI\xCE\x94JP", BaseSpace::JP, DeltaMode::MultiStep},
    {ActionSpaceKind::JV, "jv", "JV", BaseSpace::JV, DeltaMode::None},
    {ActionSpaceKind::OI_JV, "oi-jv", "OI\xCE\x94JV", BaseSpace::JV, DeltaMode::OneStep},
    {ActionSpaceKind::MI_JV, "mi-jv", "MI\xCE\x94JV", BaseSpace::JV, DeltaMode::MultiStep},
    {ActionSpaceKind::CP, "cp", "CP", BaseSpace::CP, DeltaMode::None},
    {ActionSpaceKind::OI_CP, "oi-cp", "OI\xCE\x94" "CP", BaseSpace::CP, DeltaMode::OneStep},
    {ActionSpaceKind::MI_CP, "mi-cp", "MI\xCE\x94" "CP", BaseSpace::CP, DeltaMode::MultiStep},
    {ActionSpaceKind::CV, "cv", "CV", BaseSpace::CV, DeltaMode::None},
    {ActionSpaceKind::OI_CV, "oi-cv", "OI\xCE\x94" "CV", BaseSpace::CV, DeltaMode::OneStep},
    {ActionSpaceKind::MI_CV, "mi-cv", "MI\xCE\x94" "CV", BaseSpace::CV, DeltaMode::MultiStep},
}};

inline const KindInfo& info(ActionSpaceKind k) {
  for (const auto& i : kKindTable) {
    if (i.kind == k) return i;
  }
  throw std::invalid_argument("unknown action space kind");
}
}  // namespace detail

inline std::string_view kind_name(ActionSpaceKind k) { return detail::info(k).name; }
inline std::string_view kind_label(ActionSpaceKind k) { return detail::info(k).label; }
inline BaseSpace base_of(ActionSpaceKind k) { return detail::info(k).base; }
inline DeltaMode delta_of(ActionSpaceKind k) { return detail::info(k).mode; }

inline std::optional<ActionSpaceKind> parse_kind(std::string_view s) {
  std::string norm;
  for (char c : s) norm.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(c)));
  for (const auto& i : detail::kKindTable) {
    if (i.name == norm) return i.kind;
  }
  return std::nullopt;
}

inline std::string valid_kind_names() {
  std::string out;
  for (auto k : kAllKinds) {
    if (!out.empty()) out += ", ";
    out += kind_name(k);
  }
  return out;
}

inline int action_dim(ActionSpaceKind k, int n_joints) {
  switch (base_of(k)) {
    case BaseSpace::CP: return 9;   // position + 6D orientation
    case BaseSpace::CV: return 6;   // linear velocity + Euler rates
    default: return n_joints;
  }
}

struct Gains {
  Vec stiffness;  // K, N m / rad
  Vec damping;    // D, N m s / rad

  static Gains isotropic(int n, double k, double d) {
    return Gains{Vec::Constant(n, k), Vec::Constant(n, d)};
  }
  /// K with D = 2 sqrt(K), critically damped for unit joint inertia.
  static Gains critically_damped(int n, double k) { return isotropic(n, k, 2.0 * std::sqrt(k)); }

  void validate(int n) const {
    require_size(stiffness, n, "gains K");
    require_size(damping, n, "gains D");
    if ((stiffness.array() <= 0).any() || (damping.array() <= 0).any()) {
      throw std::invalid_argument("gains must be strictly positive");
    }
  }
};

struct DeltaConfig {
  Vec c;                        // per-dimension rate bound, > 0
  double dt = 1.0 / kPolicyRate;
};

struct Limits {
  Vec lo, hi;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Affine map of a in [-1, 1] onto [lo, hi]; a is clipped to [-1, 1] first.
inline Vec scale_action(const Vec& a, const Vec& lo, const Vec& hi) {
  require_size(lo, a.size(), "scale_action lo");
  require_size(hi, a.size(), "scale_action hi");
  const Vec ac = a.cwiseMax(-1.0).cwiseMin(1.0);
  return lo + 0.5 * (ac.array() + 1.0).matrix().cwiseProduct(hi - lo);
}

/// tau = K (q_d - q) + D (dq_d - dq). Gravity compensation is added by the
/// caller.
inline Vec jic_torque(const Gains& g, const Vec& q_d, const Vec& dq_d, const Vec& q,
                      const Vec& dq) {
  const auto n = q.size();
  require_size(q_d, n, "jic q_d");
  require_size(dq_d, n, "jic dq_d");
  require_size(dq, n, "jic dq");
  return g.stiffness.cwiseProduct(q_d - q) + g.damping.cwiseProduct(dq_d - dq);
}

/// v_d = clip(ref + c a dt, lo, hi). For ref inside [lo, hi] the result
/// satisfies ref - c dt <= v_d <= ref + c dt exactly in floating point.
inline Vec delta_update(const Vec& ref, const Vec& a, const DeltaConfig& cfg, const Vec& lo,
                        const Vec& hi) {
  const auto m = ref.size();
  require_size(a, m, "delta_update a");
  require_size(cfg.c, m, "delta_update c");
  const Vec ac = a.cwiseMax(-1.0).cwiseMin(1.0);
  const Vec step = cfg.c * cfg.dt;
  Vec v = ref + cfg.c.cwiseProduct(ac) * cfg.dt;
  v = v.cwiseMax(ref - step).cwiseMin(ref + step);
  return clamp(v, lo, hi);
}

inline Limits output_limits(BaseSpace base, const RobotModel& m) {
  const int n = m.n_joints();
  const auto& c = m.cartesian;
  switch (base) {
    case BaseSpace::JT: return {-m.tau_max, m.tau_max};
    case BaseSpace::JP: return {m.q_min, m.q_max};
    case BaseSpace::JV: return {-m.dq_max, m.dq_max};
    case BaseSpace::CP: {
      Vec lo(9), hi(9);
      lo << c.pos_min, Vec::Constant(6, -1.0);
      hi << c.pos_max, Vec::Constant(6, 1.0);
      return {lo, hi};
    }
    case BaseSpace::CV: {
      Vec hi(6);
      hi << Vec::Constant(3, c.lin_vel_max), Vec::Constant(3, c.ang_vel_max);
      return {-hi, hi};
    }
  }
  (void)n;
  throw std::invalid_argument("output_limits: unknown base space");
}

/// Default delta rate: the derivative bound of the base variable.
inline Vec default_delta_rate(BaseSpace base, const RobotModel& m) {
  const auto& c = m.cartesian;
  switch (base) {
    case BaseSpace::JP: return m.dq_max;
    case BaseSpace::JV: return m.ddq_max;
    case BaseSpace::CP: {
      Vec r(9);
      r << Vec::Constant(3, c.lin_vel_max), Vec::Constant(6, c.ang_vel_max);
      return r;
    }
    case BaseSpace::CV: {
      Vec r(6);
      r << Vec::Constant(3, c.lin_acc_max), Vec::Constant(3, c.ang_acc_max);
      return r;
    }
    case BaseSpace::JT: return Vec::Ones(m.n_joints());
  }
  throw std::invalid_argument("default_delta_rate: unknown base space");
}

/// Everything a controller may read about the robot at one instant.
struct Feedback {
  JointState joints;
  Pose ee;
  Twist ee_vel;

  static Feedback from(const RobotModel& m, const JointState& js) {
    const ChainFrames f = chain_frames(m, js.q);
    Feedback fb;
    fb.joints = js;
    fb.ee = Pose{f.ee.translation(), f.ee.linear()};
    fb.ee_vel = Twist::from_stacked(jacobian_from_frames(m, f) * js.dq);
    return fb;
  }
};

inline Vec euler_rates_from_angular(const Mat3& rotation, const Vec3& omega) {
  const auto e = rotation_to_euler_xyz(rotation);
  const Mat3 rate = euler_xyz_rate_matrix(e.angles);
  return damped_pinv(rate, 1e-6) * omega;
}

/// The base-space feedback variable v (same units and limits as v_d).
inline Vec feedback_variable(BaseSpace base, const Feedback& fb) {
  switch (base) {
    case BaseSpace::JP: return fb.joints.q;
    case BaseSpace::JV: return fb.joints.dq;
    case BaseSpace::CP: {
      Vec v(9);
      v << fb.ee.position, rotation_to_6d(fb.ee.rotation);
      return v;
    }
    case BaseSpace::CV: {
      Vec v(6);
      v << fb.ee_vel.linear, euler_rates_from_angular(fb.ee.rotation, fb.ee_vel.angular);
      return v;
    }
    case BaseSpace::JT: return Vec();
  }
  throw std::invalid_argument("feedback_variable: unknown base space");
}

// ---------------------------------------------------------------------------
// Configuration and per-episode state
// ---------------------------------------------------------------------------

struct ActionSpaceConfig {
  ActionSpaceKind kind = ActionSpaceKind::JV;
  Gains gains;
  DeltaConfig delta;
  IkParams ik;
  double kp_cartesian = 5.0;  // 1/s, CP proportional law
  int action_repeat = 2;
  double control_dt = 1.0 / kControlRate;
  /// Low-pass + rate limiter on the joint command (evaluation/replay only).
  bool deployment_filters = false;
  double lowpass_hz = 5.0;

  static ActionSpaceConfig defaults(ActionSpaceKind kind, const RobotModel& m) {
    ActionSpaceConfig c;
    c.kind = kind;
    c.gains = Gains::critically_damped(m.n_joints(), 300.0);
    c.delta.c = default_delta_rate(base_of(kind), m);
    c.delta.dt = 1.0 / kPolicyRate;
    return c;
  }

  void validate(const RobotModel& m) const {
    gains.validate(m.n_joints());
    if (delta_of(kind) != DeltaMode::None) {
      require_size(delta.c, action_dim(kind, m.n_joints()), "delta c");
      if ((delta.c.array() <= 0).any()) throw std::invalid_argument("delta c must be > 0");
    }
    if (!(delta.dt > 0) || !(control_dt > 0) || action_repeat < 1) {
      throw std::invalid_argument("invalid controller timing");
    }
    if (kp_cartesian < 0) throw std::invalid_argument("kp_cartesian must be >= 0");
  }
};

inline nlohmann::json to_json(const ActionSpaceConfig& c) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"kind", std::string(kind_name(c.kind))},
          {"stiffness", vec(c.gains.stiffness)},
          {"damping", vec(c.gains.damping)},
          {"delta_c", vec(c.delta.c)},
          {"policy_dt", c.delta.dt},
          {"ik_damping", c.ik.damping},
          {"k_null", c.ik.k_null},
          {"kp_cartesian", c.kp_cartesian},
          {"action_repeat", c.action_repeat},
          {"control_dt", c.control_dt},
          {"deployment_filters", c.deployment_filters},
          {"lowpass_hz", c.lowpass_hz}};
}

/// Reads a config; keys that are absent keep the robot-derived defaults.
inline ActionSpaceConfig action_config_from_json(const nlohmann::json& j, const RobotModel& m) {
  auto kind = parse_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown action space: " + j.at("kind").get<std::string>());
  ActionSpaceConfig c = ActionSpaceConfig::defaults(*kind, m);
  auto vec = [](const nlohmann::json& a) {
    auto v = a.get<std::vector<double>>();
    return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  auto scalar_or_vec = [&](const nlohmann::json& a, int n) {
    return a.is_number() ? Vec(Vec::Constant(n, a.get<double>())) : vec(a);
  };
  const int n = m.n_joints();
  if (j.contains("stiffness")) {
    c.gains.stiffness = scalar_or_vec(j["stiffness"], n);
    if (!j.contains("damping")) c.gains.damping = 2.0 * c.gains.stiffness.cwiseSqrt();
  }
  if (j.contains("damping")) c.gains.damping = scalar_or_vec(j["damping"], n);
  if (j.contains("delta_c")) c.delta.c = scalar_or_vec(j["delta_c"], action_dim(*kind, n));
  c.delta.dt = j.value("policy_dt", c.delta.dt);
  c.ik.damping = j.value("ik_damping", c.ik.damping);
  c.ik.k_null = j.value("k_null", c.ik.k_null);
  c.kp_cartesian = j.value("kp_cartesian", c.kp_cartesian);
  c.action_repeat = j.value("action_repeat", c.action_repeat);
  c.control_dt = j.value("control_dt", c.control_dt);
  c.deployment_filters = j.value("deployment_filters", c.deployment_filters);
  c.lowpass_hz = j.value("lowpass_hz", c.lowpass_hz);
  c.validate(m);
  return c;
}

struct ControllerState {
  Vec v_d;        // control target in base-variable units
  Vec q_d;        // joint position target fed to the JIC
  Vec dq_d;       // joint velocity target fed to the JIC
  Vec q_d_prev;   // joint position target of the previous policy step
  Vec q_cmd;      // last joint command after deployment filters
  Vec q_cmd_prev;
  Vec dq_cmd;
  Vec torque;     // last commanded torque
  FilterState filter;
  int substep = 0;
  bool initialized = false;
};

/// Dispatcher over the 13 spaces. Holds the controller's copy of the robot
/// model; all per-episode memory lives in ControllerState.
class ActionSpace {
 public:
  ActionSpace(RobotModel model, ActionSpaceConfig cfg)
      : model_(std::move(model)), cfg_(std::move(cfg)),
        limits_(output_limits(base_of(cfg_.kind), model_)),
        constraints_(ConstraintSet::from_model(model_, cfg_.control_dt)) {
    cfg_.validate(model_);
  }

  ActionSpaceKind kind() const { return cfg_.kind; }
  BaseSpace base() const { return base_of(cfg_.kind); }
  DeltaMode mode() const { return delta_of(cfg_.kind); }
  const ActionSpaceConfig& config() const { return cfg_; }
  const RobotModel& model() const { return model_; }
  const Limits& limits() const { return limits_; }
  int action_dim() const { return aspace::action_dim(cfg_.kind, model_.n_joints()); }

  Vec feedback(const Feedback& fb) const { return feedback_variable(base(), fb); }

  /// Episode start: every target takes the current feedback value.
  void reset(ControllerState& st, const Feedback& fb) const {
    const Vec& q = fb.joints.q;
    const int n = model_.n_joints();
    st = ControllerState{};
    st.v_d = base() == BaseSpace::JT ? Vec(Vec::Zero(n)) : feedback(fb);
    st.q_d = q;
    st.dq_d = base() == BaseSpace::JV ? fb.joints.dq : Vec(Vec::Zero(n));
    st.q_d_prev = q;
    st.q_cmd = q;
    st.q_cmd_prev = q;
    st.dq_cmd = Vec::Zero(n);
    st.torque = Vec::Zero(n);
    st.filter.reset(q);
    st.initialized = true;
  }

  /// Policy-rate target update.
  void apply_action(ControllerState& st, const Vec& a, const Feedback& fb) const {
    require_size(a, action_dim(), "action");
    if (!a.allFinite()) throw std::invalid_argument("non-finite action");
    if (!st.initialized) throw std::logic_error("controller state not reset");

    switch (mode()) {
      case DeltaMode::None: st.v_d = scale_action(a, limits_.lo, limits_.hi); break;
      case DeltaMode::OneStep:
        st.v_d = delta_update(feedback(fb), a, cfg_.delta, limits_.lo, limits_.hi);
        break;
      case DeltaMode::MultiStep:
        st.v_d = delta_update(st.v_d, a, cfg_.delta, limits_.lo, limits_.hi);
        break;
    }
    if (base() == BaseSpace::JP) {
      st.q_d = st.v_d;
      st.dq_d = (st.q_d - st.q_d_prev) / cfg_.delta.dt;
      st.q_d_prev = st.q_d;
    } else if (base() == BaseSpace::JV) {
      st.dq_d = st.v_d;
    }
  }

  /// Controller-rate torque from the current targets.
  Vec control(ControllerState& st, const Feedback& fb) const {
    const Vec& q = fb.joints.q;
    const Vec& dq = fb.joints.dq;
    const double h = cfg_.control_dt;
    if (base() == BaseSpace::JT) {
      st.torque = clamp_symmetric(st.v_d, model_.tau_max);
      return st.torque;
    }
    if (base() != BaseSpace::JP) {
      if (base() == BaseSpace::CV || base() == BaseSpace::CP) {
        st.dq_d = ik_velocity(model_, q, cartesian_velocity_target(st, fb), cfg_.ik);
      }
      // one-step integrators anchor the joint target on the live feedback
      const Vec& anchor = mode() == DeltaMode::OneStep ? q : st.q_d;
      st.q_d = clamp(anchor + st.dq_d * h, model_.q_min, model_.q_max);
    }

    Vec q_cmd = st.q_d;
    Vec dq_cmd = st.dq_d;
    if (cfg_.deployment_filters) {
      const Vec smooth = low_pass(st.filter, st.q_d, h, cfg_.lowpass_hz);
      q_cmd = rate_limit(st.filter, smooth, constraints_, h);
      dq_cmd = (q_cmd - st.q_cmd) / h;
    }
    st.q_cmd_prev = st.q_cmd;
    st.q_cmd = q_cmd;
    st.dq_cmd = dq_cmd;

    Vec tau = jic_torque(cfg_.gains, q_cmd, dq_cmd, q, dq) + gravity_torque(model_, q);
    st.torque = clamp_symmetric(tau, model_.tau_max);
    return st.torque;
  }

  /// Controller-rate entry point with action repeat: the targets are
  /// refreshed from `a` on the first substep of every policy step.
  Vec compute_torque(ControllerState& st, const Vec& a, const Feedback& fb) const {
    if (st.substep == 0) apply_action(st, a, fb);
    Vec tau = control(st, fb);
    st.substep = (st.substep + 1) % cfg_.action_repeat;
    return tau;
  }

  /// World-frame twist requested from the IK for CV/CP.
  Twist cartesian_velocity_target(const ControllerState& st, const Feedback& fb) const {
    if (base() == BaseSpace::CV) {
      const auto e = rotation_to_euler_xyz(fb.ee.rotation);
      const Vec3 omega = euler_xyz_rate_matrix(e.angles) * st.v_d.segment<3>(3);
      return Twist{st.v_d.segment<3>(0), omega};
    }
    // CP: proportional law on position and on the rotation log map
    Mat3 r_d;
    try {
      r_d = rotation_from_6d(st.v_d.segment<6>(3));
    } catch (const std::invalid_argument&) {
      r_d = fb.ee.rotation;  // degenerate 6D target: hold orientation
    }
    return Twist{cfg_.kp_cartesian * (st.v_d.segment<3>(0) - fb.ee.position),
                 cfg_.kp_cartesian * orientation_error(r_d, fb.ee.rotation)};
  }

 private:
  RobotModel model_;
  ActionSpaceConfig cfg_;
  Limits limits_;
  ConstraintSet constraints_;
};

}  // namespace aspace
