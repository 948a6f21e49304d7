#pragma once

// Serial-arm description: joint frames, link inertials, and motion limits.
//
// Frame convention (URDF-like): the frame of joint i is
//   F_i = F_{i-1} * Trans(origin_xyz_i) * Rot(origin_rpy_i) * AxisAngle(axis_i, q_i)
// with F_{-1} the world/base frame. Link i is rigidly attached to F_i and its
// centre of mass and inertia tensor are expressed in F_i. The end-effector
// (tool) frame is F_{n-1} * tool.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aspace/common.hpp"
#include "aspace/orientation.hpp"

namespace aspace {

struct JointSpec {
  std::string name;
  Vec3 origin_xyz = Vec3::Zero();
  Mat3 origin_rot = Mat3::Identity();
  Vec3 axis = Vec3::UnitZ();
};

struct LinkInertial {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Identity() * 1e-4;  // about the com, in the link frame
};

/// Bounds for Cartesian targets, used to scale and clip CP/CV actions.
struct CartesianLimits {
  Vec3 pos_min = Vec3::Constant(-1.0);
  Vec3 pos_max = Vec3::Constant(1.0);
  double lin_vel_max = 0.5;   // m/s
  double ang_vel_max = 1.0;   // rad/s (Euler rates for CV)
  double lin_acc_max = 5.0;   // m/s^2
  double ang_acc_max = 10.0;  // rad/s^2
};

struct RobotModel {
  std::string name;
  std::vector<JointSpec> joints;
  std::vector<LinkInertial> links;
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();

  Vec q_min, q_max;
  Vec dq_max, ddq_max, dddq_max;
  Vec tau_max;
  Vec q_def;
  /// Reflected rotor inertia added to the mass-matrix diagonal (kg m^2).
  Vec armature;

  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  CartesianLimits cartesian;

  int n_joints() const { return static_cast<int>(joints.size()); }

  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
};

struct JointState {
  Vec q;
  Vec dq;
};

struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 v;
    v << linear, angular;
    return v;
  }
  static Twist from_stacked(const Eigen::Ref<const Vec>& v) {
    require_size(v, 6, "Twist");
    return Twist{v.segment<3>(0), v.segment<3>(3)};
  }
};

inline void RobotModel::validate() const {
  const int n = n_joints();
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("robot '" + name + "': " + msg);
  };
  if (n < 2) fail("needs at least 2 joints");
  if (static_cast<int>(links.size()) != n) fail("one link per joint required");
  for (const Vec* v : {&q_min, &q_max, &dq_max, &ddq_max, &dddq_max, &tau_max,
                       &q_def, &armature}) {
    if (v->size() != n) fail("limit vector length mismatch");
    if (!v->allFinite()) fail("non-finite limit");
  }
  if ((q_min.array() >= q_max.array()).any()) fail("q_min must be < q_max");
  if ((dq_max.array() <= 0).any() || (ddq_max.array() <= 0).any() ||
      (dddq_max.array() <= 0).any() || (tau_max.array() <= 0).any()) {
    fail("motion and torque bounds must be strictly positive");
  }
  if ((q_def.array() < q_min.array()).any() ||
      (q_def.array() > q_max.array()).any()) {
    fail("q_def outside joint limits");
  }
  if ((armature.array() < 0).any()) fail("armature must be non-negative");
  for (int i = 0; i < n; ++i) {
    if (std::abs(joints[i].axis.norm() - 1.0) > 1e-9) fail("joint axis must be unit");
    if (!is_rotation(joints[i].origin_rot)) fail("joint origin rotation invalid");
    const auto& l = links[i];
    if (l.mass < 0) fail("negative link mass");
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      fail("link inertia not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(l.inertia);
    if (es.eigenvalues().minCoeff() <= 0) fail("link inertia not positive definite");
  }
  if ((cartesian.pos_min.array() >= cartesian.pos_max.array()).any()) {
    fail("cartesian pos_min must be < pos_max");
  }
  if (cartesian.lin_vel_max <= 0 || cartesian.ang_vel_max <= 0 ||
      cartesian.lin_acc_max <= 0 || cartesian.ang_acc_max <= 0) {
    fail("cartesian bounds must be positive");
  }
}

/// Same robot with every link mass and inertia multiplied by `scale`.
inline RobotModel with_mass_scale(RobotModel m, double scale) {
  for (auto& l : m.links) {
    l.mass *= scale;
    l.inertia *= scale;
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON description
// ---------------------------------------------------------------------------

namespace detail {

inline Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json vec3_to(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Mat3 rpy_to_rotation(const Vec3& rpy) {
  // URDF fixed-axis roll-pitch-yaw: R = Rz(yaw) Ry(pitch) Rx(roll).
  return rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x());
}

inline Vec3 rotation_to_rpy(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return Vec3(roll, pitch, yaw);
}

inline Mat3 inertia_from(const nlohmann::json& j) {
  // [ixx, iyy, izz, ixy, ixz, iyz]
  if (!j.is_array() || j.size() != 6) throw std::invalid_argument("inertia needs 6 entries");
  Mat3 m;
  const double ixx = j[0], iyy = j[1], izz = j[2], ixy = j[3], ixz = j[4], iyz = j[5];
  m << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
  return m;
}

}  // namespace detail

inline RobotModel robot_from_json(const nlohmann::json& j) {
  RobotModel m;
  m.name = j.value("name", std::string("robot"));
  const auto& js = j.at("joints");
  const int n = static_cast<int>(js.size());
  m.q_min.resize(n);
  m.q_max.resize(n);
  m.dq_max.resize(n);
  m.ddq_max.resize(n);
  m.dddq_max.resize(n);
  m.tau_max.resize(n);
  m.q_def.resize(n);
  m.armature.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& jj = js[i];
    JointSpec spec;
    spec.name = jj.value("name", "joint" + std::to_string(i));
    spec.origin_xyz = detail::vec3_from(jj.at("origin_xyz"));
    spec.origin_rot = detail::rpy_to_rotation(
        jj.contains("origin_rpy") ? detail::vec3_from(jj["origin_rpy"]) : Vec3::Zero());
    spec.axis = detail::vec3_from(jj.at("axis")).normalized();
    m.joints.push_back(spec);
    m.q_min[i] = jj.at("q_min");
    m.q_max[i] = jj.at("q_max");
    m.dq_max[i] = jj.at("dq_max");
    m.ddq_max[i] = jj.at("ddq_max");
    m.dddq_max[i] = jj.at("dddq_max");
    m.tau_max[i] = jj.at("tau_max");
    m.q_def[i] = jj.at("q_def");
    m.armature[i] = jj.value("armature", 0.0);
    const auto& lj = jj.at("link");
    LinkInertial link;
    link.mass = lj.at("mass");
    link.com = detail::vec3_from(lj.at("com"));
    link.inertia = detail::inertia_from(lj.at("inertia"));
    m.links.push_back(link);
  }
  if (j.contains("tool_xyz")) m.tool.translation() = detail::vec3_from(j["tool_xyz"]);
  if (j.contains("tool_rpy")) m.tool.linear() = detail::rpy_to_rotation(detail::vec3_from(j["tool_rpy"]));
  if (j.contains("gravity")) m.gravity = detail::vec3_from(j["gravity"]);
  if (j.contains("cartesian")) {
    const auto& c = j["cartesian"];
    m.cartesian.pos_min = detail::vec3_from(c.at("pos_min"));
    m.cartesian.pos_max = detail::vec3_from(c.at("pos_max"));
    m.cartesian.lin_vel_max = c.value("lin_vel_max", m.cartesian.lin_vel_max);
    m.cartesian.ang_vel_max = c.value("ang_vel_max", m.cartesian.ang_vel_max);
    m.cartesian.lin_acc_max = c.value("lin_acc_max", m.cartesian.lin_acc_max);
    m.cartesian.ang_acc_max = c.value("ang_acc_max", m.cartesian.ang_acc_max);
  }
  m.validate();
  return m;
}

inline nlohmann::json robot_to_json(const RobotModel& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["gravity"] = detail::vec3_to(m.gravity);
  j["tool_xyz"] = detail::vec3_to(m.tool.translation());
  j["tool_rpy"] = detail::vec3_to(detail::rotation_to_rpy(m.tool.linear()));
  nlohmann::json js = nlohmann::json::array();
  for (int i = 0; i < m.n_joints(); ++i) {
    const auto& s = m.joints[i];
    const auto& l = m.links[i];
    js.push_back({{"name", s.name},
                  {"origin_xyz", detail::vec3_to(s.origin_xyz)},
                  {"origin_rpy", detail::vec3_to(detail::rotation_to_rpy(s.origin_rot))},
                  {"axis", detail::vec3_to(s.axis)},
                  {"q_min", m.q_min[i]},
                  {"q_max", m.q_max[i]},
                  {"dq_max", m.dq_max[i]},
                  {"ddq_max", m.ddq_max[i]},
                  {"dddq_max", m.dddq_max[i]},
                  {"tau_max", m.tau_max[i]},
                  {"q_def", m.q_def[i]},
                  {"armature", m.armature[i]},
                  {"link",
                   {{"mass", l.mass},
                    {"com", detail::vec3_to(l.com)},
                    {"inertia",
                     {l.inertia(0, 0), l.inertia(1, 1), l.inertia(2, 2),
                      l.inertia(0, 1), l.inertia(0, 2), l.inertia(1, 2)}}}}});
  }
  j["joints"] = js;
  j["cartesian"] = {{"pos_min", detail::vec3_to(m.cartesian.pos_min)},
                    {"pos_max", detail::vec3_to(m.cartesian.pos_max)},
                    {"lin_vel_max", m.cartesian.lin_vel_max},
                    {"ang_vel_max", m.cartesian.ang_vel_max},
                    {"lin_acc_max", m.cartesian.lin_acc_max},
                    {"ang_acc_max", m.cartesian.ang_acc_max}};
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline std::filesystem::path config_dir() {
#ifdef ASPACE_CONFIG_DIR
  std::filesystem::path compiled(ASPACE_CONFIG_DIR);
#else
  std::filesystem::path compiled("config");
#endif
  if (const char* env = std::getenv("ASPACE_CONFIG")) return env;
  return compiled;
}

/// Accepts either a path to a description file or the name of a shipped
/// robot ("planar3", "spatial7").
inline RobotModel load_robot(const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (!std::filesystem::exists(p)) {
    p = config_dir() / "robots" / (name_or_path + ".json");
  }
  if (!std::filesystem::exists(p)) {
    throw std::runtime_error("robot description not found: " + name_or_path);
  }
  return robot_from_json(read_json_file(p));
}

}  // namespace aspace
