#pragma once

// Trajectory logs: one JSON object per line. A file holds one or more
// episodes; each starts with a header line and continues with one step line
// per controller step.
//
//   {"type":"header","schema":"aspace.trajectory","version":1, ...}
//   {"type":"step","k":0,"t":0.0083,"substep":0,"a":[..],"v_d":[..],...}
//
// The header carries everything needed to replay the episode open loop:
// robot description, action-space config, initial state, box, and the
// perturbation profile of the world the log was recorded in.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aspace/rollout.hpp"

namespace aspace {

inline constexpr int kTrajectoryVersion = 1;
inline constexpr const char* kTrajectorySchema = "aspace.trajectory";

class TrajectoryFormatError : public std::runtime_error {
 public:
  TrajectoryFormatError(const std::string& msg, long line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

struct TrajectoryHeader {
  int version = kTrajectoryVersion;
  std::string kind;  // action space name
  std::string task;  // "reach" or "push"
  std::uint64_t seed = 0;
  int episode = 0;
  nlohmann::json robot;          // full description
  nlohmann::json action_config;  // to_json(ActionSpaceConfig)
  Perturbation recorded_in;      // world the log was recorded in
  JointState initial;
  BoxState box0;
  std::optional<BoxParams> box;
  Vec3 goal = Vec3::Zero();
  Vec v_lo, v_hi;  // limits of the control variable
  double dt = 1.0 / kControlRate;
  double eps = 0.02;  // success radius
  ContactParams contact;
};

struct StepRecord {
  long k = 0;
  double t = 0.0;
  int substep = 0;
  Vec a, v_d, v;
  Vec q, dq;  // after the step
  Vec3 ee = Vec3::Zero();
  Vec tau;
  Vec3 goal = Vec3::Zero();
  ConstraintFlags flags;
  double reward = 0.0;  // nonzero only on the last substep of a policy step
  BoxState box;
};

struct Trajectory {
  TrajectoryHeader header;
  std::vector<StepRecord> steps;

  /// Joint positions including the initial sample, 1 + steps.size() long.
  std::vector<Vec> joint_stream() const {
    std::vector<Vec> out;
    out.reserve(steps.size() + 1);
    out.push_back(header.initial.q);
    for (const auto& s : steps) out.push_back(s.q);
    return out;
  }

  double episode_return() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }

  /// Final Euclidean distance to the goal: end-effector for reaching,
  /// planar box position for pushing.
  double final_distance() const {
    if (steps.empty()) throw std::invalid_argument("empty trajectory");
    const StepRecord& last = steps.back();
    if (header.task == "push") {
      return std::hypot(last.box.x - last.goal.x(), last.box.y - last.goal.y());
    }
    return (last.ee - last.goal).norm();
  }
};

namespace detail {

inline nlohmann::json vec_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vec json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json box_state_json(const BoxState& b) {
  return {b.x, b.y, b.yaw, b.vx, b.vy, b.wz};
}

inline BoxState json_box_state(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 6) throw std::invalid_argument("box state needs 6 entries");
  return BoxState{v[0], v[1], v[2], v[3], v[4], v[5]};
}

}  // namespace detail

inline nlohmann::json header_to_json(const TrajectoryHeader& h) {
  using detail::vec_json;
  nlohmann::json j{{"type", "header"},
                   {"schema", kTrajectorySchema},
                   {"version", h.version},
                   {"kind", h.kind},
                   {"task", h.task},
                   {"seed", h.seed},
                   {"episode", h.episode},
                   {"robot", h.robot},
                   {"action_config", h.action_config},
                   {"recorded_in", to_json(h.recorded_in)},
                   {"q0", vec_json(h.initial.q)},
                   {"dq0", vec_json(h.initial.dq)},
                   {"box0", detail::box_state_json(h.box0)},
                   {"goal", {h.goal.x(), h.goal.y(), h.goal.z()}},
                   {"v_lo", vec_json(h.v_lo)},
                   {"v_hi", vec_json(h.v_hi)},
                   {"dt", h.dt},
                   {"eps", h.eps},
                   {"contact",
                    {{"stiffness", h.contact.stiffness},
                     {"damping", h.contact.damping},
                     {"tip_radius", h.contact.tip_radius},
                     {"tip_friction", h.contact.tip_friction},
                     {"table_height", h.contact.table_height},
                     {"table_contact", h.contact.table_contact}}}};
  if (h.box) {
    j["box"] = {{"mass", h.box->mass},
                {"friction_coeff", h.box->friction_coeff},
                {"half_extents", {h.box->half_extents.x(), h.box->half_extents.y(),
                                  h.box->half_extents.z()}}};
  }
  return j;
}

inline TrajectoryHeader header_from_json(const nlohmann::json& j) {
  using detail::json_vec;
  if (j.value("schema", std::string()) != kTrajectorySchema) {
    throw std::invalid_argument("not a trajectory header");
  }
  TrajectoryHeader h;
  h.version = j.at("version");
  if (h.version != kTrajectoryVersion) {
    throw std::invalid_argument("unsupported trajectory version " + std::to_string(h.version));
  }
  h.kind = j.at("kind");
  h.task = j.at("task");
  h.seed = j.value("seed", std::uint64_t{0});
  h.episode = j.value("episode", 0);
  h.robot = j.at("robot");
  h.action_config = j.at("action_config");
  h.recorded_in = perturbation_from_json(j.value("recorded_in", nlohmann::json::object()));
  h.initial.q = json_vec(j.at("q0"));
  h.initial.dq = json_vec(j.at("dq0"));
  h.box0 = detail::json_box_state(j.at("box0"));
  if (j.contains("box")) {
    const auto& b = j["box"];
    BoxParams p;
    p.mass = b.at("mass");
    p.friction_coeff = b.at("friction_coeff");
    p.half_extents = detail::vec3_from(b.at("half_extents"));
    p.validate();
    h.box = p;
  }
  h.goal = detail::vec3_from(j.at("goal"));
  h.v_lo = json_vec(j.at("v_lo"));
  h.v_hi = json_vec(j.at("v_hi"));
  h.dt = j.value("dt", 1.0 / kControlRate);
  h.eps = j.value("eps", 0.02);
  if (j.contains("contact")) {
    const auto& c = j["contact"];
    h.contact.stiffness = c.value("stiffness", h.contact.stiffness);
    h.contact.damping = c.value("damping", h.contact.damping);
    h.contact.tip_radius = c.value("tip_radius", h.contact.tip_radius);
    h.contact.tip_friction = c.value("tip_friction", h.contact.tip_friction);
    h.contact.table_height = c.value("table_height", h.contact.table_height);
    h.contact.table_contact = c.value("table_contact", h.contact.table_contact);
  }
  return h;
}

inline nlohmann::json step_to_json(const StepRecord& s) {
  using detail::vec_json;
  return {{"type", "step"},
          {"k", s.k},
          {"t", s.t},
          {"substep", s.substep},
          {"a", vec_json(s.a)},
          {"v_d", vec_json(s.v_d)},
          {"v", vec_json(s.v)},
          {"q", vec_json(s.q)},
          {"dq", vec_json(s.dq)},
          {"ee", {s.ee.x(), s.ee.y(), s.ee.z()}},
          {"tau", vec_json(s.tau)},
          {"goal", {s.goal.x(), s.goal.y(), s.goal.z()}},
          {"flags", {s.flags.velocity, s.flags.acceleration, s.flags.jerk}},
          {"reward", s.reward},
          {"box", detail::box_state_json(s.box)}};
}

inline StepRecord step_from_json(const nlohmann::json& j) {
  using detail::json_vec;
  StepRecord s;
  s.k = j.at("k");
  s.t = j.at("t");
  s.substep = j.at("substep");
  s.a = json_vec(j.at("a"));
  s.v_d = json_vec(j.at("v_d"));
  s.v = json_vec(j.at("v"));
  s.q = json_vec(j.at("q"));
  s.dq = json_vec(j.at("dq"));
  s.ee = detail::vec3_from(j.at("ee"));
  s.tau = json_vec(j.at("tau"));
  s.goal = detail::vec3_from(j.at("goal"));
  const auto& f = j.at("flags");
  s.flags = ConstraintFlags{f.at(0).get<bool>(), f.at(1).get<bool>(), f.at(2).get<bool>()};
  s.reward = j.value("reward", 0.0);
  s.box = detail::json_box_state(j.at("box"));
  return s;
}

inline void write_trajectory(std::ostream& out, const Trajectory& tr) {
  out << header_to_json(tr.header).dump() << '\n';
  for (const auto& s : tr.steps) out << step_to_json(s).dump() << '\n';
}

inline void write_trajectories(const std::filesystem::path& path,
                               const std::vector<Trajectory>& trs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  for (const auto& tr : trs) write_trajectory(out, tr);
}

/// Parses every episode in a stream. Throws TrajectoryFormatError naming the
/// first bad line.
inline std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const std::string type = j.at("type");
      if (type == "header") {
        out.push_back(Trajectory{header_from_json(j), {}});
      } else if (type == "step") {
        if (out.empty()) throw std::invalid_argument("step before any header");
        out.back().steps.push_back(step_from_json(j));
      } else {
        throw std::invalid_argument("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw TrajectoryFormatError(e.what(), n);
    }
  }
  return out;
}

inline std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_trajectories(in);
}

}  // namespace aspace
