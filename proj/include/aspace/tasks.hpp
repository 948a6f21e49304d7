#pragma once

// Reaching and pushing environments stepped at the policy rate.
//
// Each env_step holds the action for action_repeat controller steps (two at
// 60/120 Hz) and evaluates the reward once. Observations:
//   reach: [q, dq, ee position, goal]
//   push:  [q, dq, ee position, goal, box position, box yaw]
// Pushing goals are points on the table; their z is the box centre height.

#include <random>

#include <json.hpp>

#include "aspace/trajectory.hpp"

namespace aspace {

enum class TaskKind { Reach, Push };

inline std::string_view task_name(TaskKind t) { return t == TaskKind::Reach ? "reach" : "push"; }

inline std::optional<TaskKind> parse_task(std::string_view s) {
  if (s == "reach") return TaskKind::Reach;
  if (s == "push") return TaskKind::Push;
  return std::nullopt;
}

struct RewardConfig {
  double lambda_r = 1.0;     // distance reward
  double lambda_eps = 5.0;   // exact-reach bonus
  double lambda_q = 0.01;    // joint velocity penalty
  double lambda_n = 0.05;    // distance from the default posture
  double lambda_l = 1.0;     // joint limit proximity
  double lambda_s = 0.05;    // action smoothness
  double lambda_c = 1.0;     // table collision (push)
  double eps = 0.02;         // success radius, m
  double dist_scale = 1.0;   // m; distance terms use d / dist_scale
  int horizon = 120;         // policy steps
  double gamma = 0.99;

  void validate() const {
    for (double l : {lambda_r, lambda_eps, lambda_q, lambda_n, lambda_l, lambda_s, lambda_c}) {
      if (!(l >= 0)) throw std::invalid_argument("reward weights must be >= 0");
    }
    if (!(eps > 0)) throw std::invalid_argument("eps must be > 0");
    if (!(dist_scale > 0)) throw std::invalid_argument("dist_scale must be > 0");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (!(gamma >= 0 && gamma <= 1)) throw std::invalid_argument("gamma must be in [0, 1]");
  }
};

struct Range {
  double lo = 0.0, hi = 0.0;
};

struct RandomizationRanges {
  Range friction{0.2, 0.5};
  Range mass{0.3, 0.8};

  void validate() const {
    if (friction.lo > friction.hi || mass.lo > mass.hi) {
      throw std::invalid_argument("randomization range with lo > hi");
    }
    if (friction.lo < 0 || !(mass.lo > 0)) throw std::invalid_argument("invalid box ranges");
  }
};

struct TaskConfig {
  TaskKind task = TaskKind::Reach;
  // reaching goals, uniform in this box
  Vec3 workspace_min = Vec3(0.3, 0.0, 0.15);
  Vec3 workspace_max = Vec3(0.6, 0.0, 0.45);
  // pushing: goal area and initial box area on the table (x, y)
  Eigen::Vector2d goal_min = Eigen::Vector2d(0.48, 0.0);
  Eigen::Vector2d goal_max = Eigen::Vector2d(0.60, 0.0);
  Eigen::Vector2d box_min = Eigen::Vector2d(0.38, 0.0);
  Eigen::Vector2d box_max = Eigen::Vector2d(0.42, 0.0);
  // the region the box is allowed to roam during sequential evaluation
  Eigen::Vector2d area_min = Eigen::Vector2d(0.30, -0.10);
  Eigen::Vector2d area_max = Eigen::Vector2d(0.66, 0.10);
  BoxParams box;
  RandomizationRanges randomization;
  bool randomize = true;     // domain randomization on push resets
  double init_noise = 0.02;  // rad, uniform around q_def
  Vec init_q;                // optional start posture; q_def when empty
  RewardConfig reward;
  int grid_per_axis = 3;     // evaluation goal grid resolution
  int success_hold = 15;     // evaluation: stop after this many steps in the goal
  ContactParams contact;

  void validate() const {
    reward.validate();
    randomization.validate();
    box.validate();
    if ((workspace_min.array() > workspace_max.array()).any() ||
        (goal_min.array() > goal_max.array()).any() ||
        (box_min.array() > box_max.array()).any() ||
        (area_min.array() > area_max.array()).any()) {
      throw std::invalid_argument("task region with min > max");
    }
    if (init_noise < 0) throw std::invalid_argument("init_noise must be >= 0");
    if (grid_per_axis < 1) throw std::invalid_argument("grid_per_axis must be >= 1");
  }
};

namespace detail {
inline Eigen::Vector2d vec2_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected 2-vector");
  return Eigen::Vector2d(j[0].get<double>(), j[1].get<double>());
}
inline Range range_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [lo, hi]");
  return Range{j[0].get<double>(), j[1].get<double>()};
}
}  // namespace detail

inline RewardConfig reward_from_json(const nlohmann::json& j, RewardConfig r = {}) {
  r.lambda_r = j.value("lambda_r", r.lambda_r);
  r.dist_scale = j.value("dist_scale", r.dist_scale);
  r.lambda_eps = j.value("lambda_eps", r.lambda_eps);
  r.lambda_q = j.value("lambda_q", r.lambda_q);
  r.lambda_n = j.value("lambda_n", r.lambda_n);
  r.lambda_l = j.value("lambda_l", r.lambda_l);
  r.lambda_s = j.value("lambda_s", r.lambda_s);
  r.lambda_c = j.value("lambda_c", r.lambda_c);
  r.eps = j.value("eps", r.eps);
  r.horizon = j.value("horizon", r.horizon);
  r.gamma = j.value("gamma", r.gamma);
  r.validate();
  return r;
}

inline nlohmann::json to_json(const RewardConfig& r) {
  return {{"lambda_r", r.lambda_r},   {"dist_scale", r.dist_scale}, {"lambda_eps", r.lambda_eps},
          {"lambda_q", r.lambda_q},   {"lambda_n", r.lambda_n},     {"lambda_l", r.lambda_l},
          {"lambda_s", r.lambda_s},   {"lambda_c", r.lambda_c},     {"eps", r.eps},
          {"horizon", r.horizon},     {"gamma", r.gamma}};
}

/// Reads a task config; absent keys keep the defaults of `base`.
inline TaskConfig task_from_json(const nlohmann::json& j, TaskConfig t = {}) {
  using detail::vec2_from;
  if (j.contains("task")) {
    auto k = parse_task(j["task"].get<std::string>());
    if (!k) throw std::invalid_argument("unknown task: " + j["task"].get<std::string>());
    t.task = *k;
  }
  if (j.contains("workspace_min")) t.workspace_min = detail::vec3_from(j["workspace_min"]);
  if (j.contains("workspace_max")) t.workspace_max = detail::vec3_from(j["workspace_max"]);
  if (j.contains("goal_min")) t.goal_min = vec2_from(j["goal_min"]);
  if (j.contains("goal_max")) t.goal_max = vec2_from(j["goal_max"]);
  if (j.contains("box_min")) t.box_min = vec2_from(j["box_min"]);
  if (j.contains("box_max")) t.box_max = vec2_from(j["box_max"]);
  if (j.contains("area_min")) t.area_min = vec2_from(j["area_min"]);
  if (j.contains("area_max")) t.area_max = vec2_from(j["area_max"]);
  if (j.contains("box")) {
    const auto& b = j["box"];
    t.box.mass = b.value("mass", t.box.mass);
    t.box.friction_coeff = b.value("friction_coeff", t.box.friction_coeff);
    if (b.contains("half_extents")) t.box.half_extents = detail::vec3_from(b["half_extents"]);
  }
  if (j.contains("randomization")) {
    const auto& r = j["randomization"];
    if (r.contains("friction")) t.randomization.friction = detail::range_from(r["friction"]);
    if (r.contains("mass")) t.randomization.mass = detail::range_from(r["mass"]);
  }
  t.randomize = j.value("randomize", t.randomize);
  t.init_noise = j.value("init_noise", t.init_noise);
  if (j.contains("init_q")) t.init_q = detail::json_vec(j["init_q"]);
  if (j.contains("reward")) t.reward = reward_from_json(j["reward"], t.reward);
  t.grid_per_axis = j.value("grid_per_axis", t.grid_per_axis);
  t.success_hold = j.value("success_hold", t.success_hold);
  if (j.contains("contact")) {
    const auto& c = j["contact"];
    t.contact.stiffness = c.value("stiffness", t.contact.stiffness);
    t.contact.damping = c.value("damping", t.contact.damping);
    t.contact.tip_radius = c.value("tip_radius", t.contact.tip_radius);
    t.contact.tip_friction = c.value("tip_friction", t.contact.tip_friction);
  }
  t.validate();
  return t;
}

inline nlohmann::json to_json(const TaskConfig& t) {
  auto v2 = [](const Eigen::Vector2d& v) { return nlohmann::json{v.x(), v.y()}; };
  auto v3 = [](const Vec3& v) { return nlohmann::json{v.x(), v.y(), v.z()}; };
  nlohmann::json j{{"task", std::string(task_name(t.task))},
                   {"workspace_min", v3(t.workspace_min)},
                   {"workspace_max", v3(t.workspace_max)},
                   {"goal_min", v2(t.goal_min)},
                   {"goal_max", v2(t.goal_max)},
                   {"box_min", v2(t.box_min)},
                   {"box_max", v2(t.box_max)},
                   {"area_min", v2(t.area_min)},
                   {"area_max", v2(t.area_max)},
                   {"box",
                    {{"mass", t.box.mass},
                     {"friction_coeff", t.box.friction_coeff},
                     {"half_extents", v3(t.box.half_extents)}}},
                   {"randomization",
                    {{"friction", {t.randomization.friction.lo, t.randomization.friction.hi}},
                     {"mass", {t.randomization.mass.lo, t.randomization.mass.hi}}}},
                   {"randomize", t.randomize},
                   {"init_noise", t.init_noise},
                   {"reward", to_json(t.reward)},
                   {"grid_per_axis", t.grid_per_axis},
                   {"success_hold", t.success_hold},
                   {"contact",
                    {{"stiffness", t.contact.stiffness},
                     {"damping", t.contact.damping},
                     {"tip_radius", t.contact.tip_radius},
                     {"tip_friction", t.contact.tip_friction}}}};
  if (t.init_q.size() > 0) j["init_q"] = detail::vec_json(t.init_q);
  return j;
}

/// Friction and mass drawn uniformly from the ranges; extents untouched.
template <class Rng>
BoxParams domain_randomize(BoxParams box, const RandomizationRanges& ranges, Rng& rng) {
  ranges.validate();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  box.friction_coeff = ranges.friction.lo + (ranges.friction.hi - ranges.friction.lo) * u(rng);
  box.mass = ranges.mass.lo + (ranges.mass.hi - ranges.mass.lo) * u(rng);
  return box;
}

// ---------------------------------------------------------------------------
// Rewards
// ---------------------------------------------------------------------------

/// What the reward reads about the state after a policy step.
struct RewardInput {
  Vec q, dq;
  Vec3 ee = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  double ee_object_gap = 0.0;  // push: tip-to-box-surface clearance
  Eigen::Vector2d object = Eigen::Vector2d::Zero();
  Eigen::Vector2d push_goal = Eigen::Vector2d::Zero();
};

struct RewardTerms {
  double dist = 0, exact = 0, push = 0;
  double vel = 0, smooth = 0, neutral = 0, limit = 0, col = 0;

  double total() const { return dist + exact + push - (vel + smooth + neutral + limit + col); }
};

namespace detail {

/// Sum over joints of exp(-30 (q - q_lim)^2) against the nearer limit.
inline double limit_proximity(const Vec& q, const RobotModel& m) {
  double s = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    const double d = std::min(std::abs(q[i] - m.q_min[i]), std::abs(q[i] - m.q_max[i]));
    s += std::exp(-30.0 * d * d);
  }
  return s;
}

inline void penalty_terms(RewardTerms& t, const RewardInput& s, const Vec& a, const Vec& a_prev,
                          const RobotModel& m, const RewardConfig& c) {
  require_size(a_prev, a.size(), "reward a_prev");
  t.vel = c.lambda_q * s.dq.squaredNorm();
  t.smooth = c.lambda_s * (a - a_prev).norm();
  t.neutral = c.lambda_n * (m.q_def - s.q).norm();
  t.limit = c.lambda_l * limit_proximity(s.q, m);
}

inline double exact_term(double dist, const Vec& dq, const RewardConfig& c) {
  if (!(dist < c.eps)) return 0.0;
  return c.lambda_eps + 1.0 / (1.0 + 100.0 * dq.squaredNorm());
}

}  // namespace detail

inline RewardTerms reward_reach_terms(const RewardInput& s, const Vec& a, const Vec& a_prev,
                                      const RobotModel& m, const RewardConfig& c) {
  RewardTerms t;
  const double d = (s.ee - s.goal).norm();
  t.dist = c.lambda_r / (1.0 + square(d / c.dist_scale));
  t.exact = detail::exact_term(d, s.dq, c);
  detail::penalty_terms(t, s, a, a_prev, m, c);
  return t;
}

inline double reward_reach(const RewardInput& s, const Vec& a, const Vec& a_prev,
                           const RobotModel& m, const RewardConfig& c) {
  return reward_reach_terms(s, a, a_prev, m, c).total();
}

/// Distance and exact terms use the end-effector/box clearance; the push
/// term uses the planar box-to-goal distance.
inline RewardTerms reward_push_terms(const RewardInput& s, const Vec& a, const Vec& a_prev,
                                     const RobotModel& m, const RewardConfig& c) {
  RewardTerms t;
  const double d = s.ee_object_gap;
  t.dist = c.lambda_r / (1.0 + square(d / c.dist_scale));
  t.exact = detail::exact_term(d, s.dq, c);
  const double dp = (s.object - s.push_goal).norm();
  t.push = c.lambda_r / (1.0 + square(dp / c.dist_scale));
  detail::penalty_terms(t, s, a, a_prev, m, c);
  t.col = s.ee.z() < 0.02 ? c.lambda_c : 0.0;
  return t;
}

inline double reward_push(const RewardInput& s, const Vec& a, const Vec& a_prev,
                          const RobotModel& m, const RewardConfig& c) {
  return reward_push_terms(s, a, a_prev, m, c).total();
}

/// Clearance between the spherical tip and the box surface, >= 0.
inline double tip_box_gap(const Vec3& ee, const BoxState& b, const BoxParams& box,
                          const ContactParams& cp) {
  const Vec3 center(b.x, b.y, cp.table_height + box.half_extents.z());
  const Vec3 local = rot_z(b.yaw).transpose() * (ee - center);
  const Vec3 outside = (local.cwiseAbs() - box.half_extents).cwiseMax(0.0);
  return std::max(0.0, outside.norm() - cp.tip_radius);
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct EnvStep {
  Vec obs;
  double reward = 0.0;
  bool done = false;
  bool success = false;  // distance inside eps after this step
};

class TaskEnv {
 public:
  /// `evaluation` switches on success-hold termination and, unless
  /// `filters` overrides it, the deployment filters; training rollouts keep
  /// both off.
  TaskEnv(RobotModel model, TaskConfig task, ActionSpaceConfig action,
          Perturbation world = {}, bool evaluation = false,
          std::optional<bool> filters = std::nullopt)
      : model_(std::move(model)), task_(std::move(task)), evaluation_(evaluation) {
    task_.validate();
    action.deployment_filters = filters.value_or(evaluation);
    WorldConfig wc;
    wc.contact = task_.contact;
    rollout_.emplace(model_, action, world, wc);
    constraints_ = ConstraintSet::from_model(model_, action.control_dt);
    a_prev_ = Vec::Zero(act_dim());
  }

  const RobotModel& model() const { return model_; }
  const TaskConfig& task() const { return task_; }
  const Rollout& rollout() const { return *rollout_; }
  bool evaluation() const { return evaluation_; }
  int act_dim() const { return rollout_->space().action_dim(); }
  int obs_dim() const {
    const int n = model_.n_joints();
    return task_.task == TaskKind::Reach ? 2 * n + 6 : 2 * n + 10;
  }
  const Vec3& goal() const { return goal_; }
  int t() const { return t_; }
  bool done() const { return done_; }

  /// Random episode start: posture noise, goal, and (push) box pose and
  /// randomized box parameters.
  Vec reset(std::uint64_t seed) {
    rng_.seed(seed);
    seed_ = seed;
    const Vec q0 = sample_posture();
    if (task_.task == TaskKind::Reach) {
      return start(q0, sample_reach_goal(), std::nullopt, std::nullopt);
    }
    BoxState b;
    const Eigen::Vector2d p = sample_in(task_.box_min, task_.box_max);
    b.x = p.x();
    b.y = p.y();
    return start(q0, sample_push_goal(), b, std::nullopt);
  }

  /// Episode start with an explicit goal (and for pushing an explicit box
  /// pose); used by the evaluation protocols.
  Vec reset_to(std::uint64_t seed, const Vec3& goal, std::optional<BoxState> box = std::nullopt) {
    rng_.seed(seed);
    seed_ = seed;
    const Vec q0 = sample_posture();
    if (task_.task == TaskKind::Push && !box) {
      BoxState b;
      const Eigen::Vector2d p = sample_in(task_.box_min, task_.box_max);
      b.x = p.x();
      b.y = p.y();
      box = b;
    }
    return start(q0, goal, box, std::nullopt);
  }

  Vec3 sample_reach_goal() {
    Vec3 g;
    for (int i = 0; i < 3; ++i) g[i] = uniform(task_.workspace_min[i], task_.workspace_max[i]);
    return g;
  }

  Vec3 sample_push_goal() {
    const Eigen::Vector2d p = sample_in(task_.goal_min, task_.goal_max);
    return Vec3(p.x(), p.y(), task_.contact.table_height + task_.box.half_extents.z());
  }

  EnvStep step(const Vec& a) {
    if (done_) throw std::logic_error("step after episode end");
    require_size(a, act_dim(), "action");
    const int repeat = rollout_->space().config().action_repeat;
    EnvStep out;
    for (int r = 0; r < repeat; ++r) {
      const ControlStep cs = rollout_->step(a);
      if (recording_) record(cs);
    }
    ++t_;
    const RewardInput s = reward_input();
    out.reward = task_.task == TaskKind::Reach
                     ? reward_reach(s, a, a_prev_, model_, task_.reward)
                     : reward_push(s, a, a_prev_, model_, task_.reward);
    a_prev_ = a;
    out.success = distance() < task_.reward.eps;
    hold_ = out.success ? hold_ + 1 : 0;
    done_ = t_ >= task_.reward.horizon ||
            (evaluation_ && task_.success_hold > 0 && hold_ >= task_.success_hold);
    if (recording_ && !trajectory_.steps.empty()) trajectory_.steps.back().reward = out.reward;
    out.obs = observe();
    out.done = done_;
    return out;
  }

  double success_radius() const { return task_.reward.eps; }

  /// Task distance: end-effector to goal (reach) or planar box to goal (push).
  double distance() const {
    const WorldState& s = rollout_->state();
    if (task_.task == TaskKind::Push) {
      return std::hypot(s.box.x - goal_.x(), s.box.y - goal_.y());
    }
    return (ee() - goal_).norm();
  }

  Vec3 ee() const { return forward_kinematics(model_, rollout_->state().joints.q).position; }

  Vec observe() const {
    const WorldState& s = rollout_->state();
    const int n = model_.n_joints();
    Vec o(obs_dim());
    o << s.joints.q, s.joints.dq, ee(), goal_,
        Vec::Zero(obs_dim() - 2 * n - 6);
    if (task_.task == TaskKind::Push) {
      o.tail<4>() << s.box.x, s.box.y, task_.contact.table_height + box_.half_extents.z(),
          s.box.yaw;
    }
    return o;
  }

  const BoxParams& box() const { return box_; }
  const WorldState& state() const { return rollout_->state(); }

  void set_recording(bool on) { recording_ = on; }
  const Trajectory& trajectory() const { return trajectory_; }
  void set_episode_index(int e) { episode_ = e; }

 private:
  Vec start(const Vec& q0, const Vec3& goal, std::optional<BoxState> box,
            std::optional<BoxParams> params) {
    goal_ = goal;
    WorldState s0;
    s0.joints.q = q0;
    s0.joints.dq = Vec::Zero(model_.n_joints());
    std::optional<BoxParams> world_box;
    if (task_.task == TaskKind::Push) {
      box_ = params ? *params
                    : (task_.randomize && !evaluation_
                           ? domain_randomize(task_.box, task_.randomization, rng_)
                           : task_.box);
      s0.box = box ? *box : BoxState{};
      world_box = box_;
    } else {
      // park the box far away so it never interacts
      s0.box = BoxState{};
      s0.box.x = 1e3;
    }
    rollout_->reset(s0, world_box);
    t_ = 0;
    hold_ = 0;
    done_ = false;
    a_prev_ = Vec::Zero(act_dim());
    if (recording_) begin_trajectory(s0);
    return observe();
  }

  Vec sample_posture() {
    Vec q = task_.init_q.size() > 0 ? task_.init_q : model_.q_def;
    require_size(q, model_.n_joints(), "init_q");
    for (int i = 0; i < q.size(); ++i) q[i] += uniform(-task_.init_noise, task_.init_noise);
    return clamp(q, model_.q_min, model_.q_max);
  }

  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  Eigen::Vector2d sample_in(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
    const double x = uniform(lo.x(), hi.x());
    const double y = uniform(lo.y(), hi.y());
    return Eigen::Vector2d(x, y);
  }

  RewardInput reward_input() const {
    const WorldState& s = rollout_->state();
    RewardInput r;
    r.q = s.joints.q;
    r.dq = s.joints.dq;
    r.ee = ee();
    r.goal = goal_;
    if (task_.task == TaskKind::Push) {
      r.ee_object_gap = tip_box_gap(r.ee, s.box, box_, task_.contact);
      r.object = Eigen::Vector2d(s.box.x, s.box.y);
      r.push_goal = goal_.head<2>();
    }
    return r;
  }

  void begin_trajectory(const WorldState& s0) {
    trajectory_ = Trajectory{};
    TrajectoryHeader& h = trajectory_.header;
    const ActionSpace& sp = rollout_->space();
    h.kind = std::string(kind_name(sp.kind()));
    h.task = std::string(task_name(task_.task));
    h.seed = seed_;
    h.episode = episode_;
    h.robot = robot_to_json(model_);
    h.action_config = to_json(sp.config());
    h.recorded_in = rollout_->perturbation();
    h.initial = s0.joints;
    h.box0 = s0.box;
    if (task_.task == TaskKind::Push) h.box = box_;
    h.goal = goal_;
    h.v_lo = sp.limits().lo;
    h.v_hi = sp.limits().hi;
    h.dt = sp.config().control_dt;
    h.eps = task_.reward.eps;
    h.contact = task_.contact;
    window_.assign(1, s0.joints.q);
  }

  void record(const ControlStep& cs) {
    StepRecord r;
    r.k = static_cast<long>(trajectory_.steps.size());
    r.t = cs.after.step_index * rollout_->space().config().control_dt;
    r.substep = cs.substep;
    r.a = cs.a;
    r.v_d = cs.v_d;
    r.v = cs.v;
    r.q = cs.after.joints.q;
    r.dq = cs.after.joints.dq;
    r.ee = cs.ee;
    r.tau = cs.tau;
    r.goal = goal_;
    r.box = cs.after.box;
    window_.push_back(r.q);
    if (window_.size() > 4) window_.erase(window_.begin());
    r.flags = check_constraints(window_, constraints_);
    trajectory_.steps.push_back(std::move(r));
  }

  RobotModel model_;
  TaskConfig task_;
  bool evaluation_;
  std::optional<Rollout> rollout_;
  std::mt19937_64 rng_;
  std::uint64_t seed_ = 0;
  BoxParams box_;
  Vec3 goal_ = Vec3::Zero();
  Vec a_prev_;
  int t_ = 0, hold_ = 0, episode_ = 0;
  bool done_ = false;
  bool recording_ = false;
  Trajectory trajectory_;
  std::vector<Vec> window_;
  ConstraintSet constraints_;
};

// ---------------------------------------------------------------------------
// Evaluation protocols
// ---------------------------------------------------------------------------

/// Evenly spaced goals over the reach workspace; degenerate axes collapse to
/// a single value.
inline std::vector<Vec3> goal_grid(const TaskConfig& t) {
  std::array<std::vector<double>, 3> axes;
  for (int i = 0; i < 3; ++i) {
    const double lo = t.workspace_min[i], hi = t.workspace_max[i];
    if (lo == hi || t.grid_per_axis == 1) {
      axes[i] = {0.5 * (lo + hi)};
      continue;
    }
    for (int k = 0; k < t.grid_per_axis; ++k) {
      axes[i].push_back(lo + (hi - lo) * k / (t.grid_per_axis - 1));
    }
  }
  std::vector<Vec3> out;
  for (double x : axes[0])
    for (double y : axes[1])
      for (double z : axes[2]) out.emplace_back(x, y, z);
  return out;
}

}  // namespace aspace
