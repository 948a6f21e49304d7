#include <gtest/gtest.h>

#include "test_util.hpp"

namespace aspace {
namespace {

using testing::random_posture;
using testing::two_link;
using testing::vec2;

TEST(ForwardKinematics, StraightTwoLinkChain) {
  const RobotModel m = two_link();
  const Pose p = forward_kinematics(m, vec2(0, 0));
  EXPECT_NEAR((p.position - Vec3(2, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(ForwardKinematics, QuarterTurnTwoLinkChain) {
  const RobotModel m = two_link();
  const Pose p = forward_kinematics(m, vec2(kPi / 2, 0));
  EXPECT_NEAR((p.position - Vec3(0, 2, 0)).norm(), 0.0, 1e-12);
  EXPECT_TRUE(is_rotation(p.rotation));
}

TEST(ForwardKinematics, RejectsWrongDimension) {
  EXPECT_THROW(forward_kinematics(two_link(), Vec3(0, 0, 0)), std::invalid_argument);
}

// Independent oracle: multiply per-joint homogeneous transforms built from
// the raw description file.
Eigen::Matrix4d transform_chain(const nlohmann::json& j, const Vec& q) {
  auto vec3 = [](const nlohmann::json& a) { return Vec3(a[0], a[1], a[2]); };
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < j["joints"].size(); ++i) {
    const auto& jj = j["joints"][i];
    Eigen::Matrix4d origin = Eigen::Matrix4d::Identity();
    origin.block<3, 1>(0, 3) = vec3(jj["origin_xyz"]);
    if (jj.contains("origin_rpy")) {
      const Vec3 rpy = vec3(jj["origin_rpy"]);
      origin.block<3, 3>(0, 0) = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                                  Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                                     .toRotationMatrix();
    }
    Eigen::Matrix4d joint = Eigen::Matrix4d::Identity();
    joint.block<3, 3>(0, 0) =
        Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], vec3(jj["axis"]).normalized())
            .toRotationMatrix();
    t = t * origin * joint;
  }
  Eigen::Matrix4d tool = Eigen::Matrix4d::Identity();
  if (j.contains("tool_xyz")) tool.block<3, 1>(0, 3) = vec3(j["tool_xyz"]);
  return t * tool;
}

TEST(ForwardKinematics, SpatialArmMatchesTransformChain) {
  const auto j = read_json_file(config_dir() / "robots" / "spatial7.json");
  const RobotModel m = robot_from_json(j);
  ASSERT_EQ(m.n_joints(), 7);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec q = random_posture(rng, m, 1.0);
    const Pose p = forward_kinematics(m, q);
    const Eigen::Matrix4d t = transform_chain(j, q);
    EXPECT_LT((p.position - t.block<3, 1>(0, 3)).norm(), 1e-12);
    EXPECT_LT((p.rotation - t.block<3, 3>(0, 0)).norm(), 1e-12);
  }
}

TEST(Jacobian, AnalyticPlanarRows) {
  const Mat j = jacobian(two_link(), vec2(0, 0));
  Mat expected(2, 2);
  expected << 0, 0, 2, 1;
  EXPECT_LT((j.topRows(2) - expected).norm(), 1e-12);
}

TEST(Jacobian, ZeroVelocityGivesZeroTwist) {
  const RobotModel m = load_robot("spatial7");
  std::mt19937_64 rng(3);
  const Vec q = random_posture(rng, m);
  EXPECT_EQ((jacobian(m, q) * Vec::Zero(7)).norm(), 0.0);
}

TEST(Jacobian, MatchesCentralDifferences) {
  for (const char* robot : {"planar3", "spatial7"}) {
    const RobotModel m = load_robot(robot);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec q = random_posture(rng, m);
      const Mat j = jacobian(m, q);
      const Pose p0 = forward_kinematics(m, q);
      const double h = 1e-6;
      for (int i = 0; i < m.n_joints(); ++i) {
        Vec qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        const Pose pp = forward_kinematics(m, qp), pm = forward_kinematics(m, qm);
        const Vec3 dv = (pp.position - pm.position) / (2 * h);
        const Vec3 dw = rotation_log(pp.rotation * pm.rotation.transpose()) / (2 * h);
        EXPECT_LT((j.block<3, 1>(0, i) - dv).norm(), 1e-5) << robot << " joint " << i;
        EXPECT_LT((j.block<3, 1>(3, i) - dw).norm(), 1e-5) << robot << " joint " << i;
      }
      (void)p0;
    }
  }
}

TEST(Jacobian, FirstOrderTaylorResidualIsQuadratic) {
  const RobotModel m = load_robot("spatial7");
  std::mt19937_64 rng(8);
  const Vec q = random_posture(rng, m);
  const Vec dir = testing::random_vec(rng, 7, -1, 1).normalized();
  const Mat j = jacobian(m, q);
  auto residual = [&](double s) {
    const Vec dq = s * dir;
    return (forward_kinematics(m, q + dq).position - forward_kinematics(m, q).position -
            j.topRows(3) * dq)
        .norm();
  };
  // halving the step quarters the residual
  const double r1 = residual(1e-2), r2 = residual(5e-3);
  EXPECT_NEAR(r1 / r2, 4.0, 0.2);
}

TEST(IkVelocity, ZeroAtDefaultPostureWithZeroTwist) {
  const RobotModel m = load_robot("spatial7");
  EXPECT_LT(ik_velocity(m, m.q_def, Twist{}).norm(), 1e-15);
}

TEST(IkVelocity, SquareJacobianMatchesDenseSolve) {
  // drop the last joint of the 7-DOF arm: the 6D task Jacobian is square
  auto j = robot_to_json(load_robot("spatial7"));
  j["joints"].erase(6);
  RobotModel m = robot_from_json(j);
  m.dq_max = Vec::Constant(6, 1e6);
  std::mt19937_64 rng(21);
  IkParams p;
  p.damping = 0.0;
  p.k_null = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec q = random_posture(rng, m);
    const Mat jac = jacobian(m, q);
    ASSERT_GT(std::abs(jac.determinant()), 1e-4);
    const Vec xd = testing::random_vec(rng, 6, -0.05, 0.05);
    const Vec exact = jac.fullPivLu().solve(xd);
    EXPECT_LT((ik_velocity(m, q, Twist::from_stacked(xd), p) - exact).norm(), 1e-8);
  }
}

TEST(IkVelocity, TwoLinkExactSolve) {
  RobotModel m = two_link();
  m.dq_max = Vec::Constant(2, 1e6);
  const Vec q = vec2(0.3, 0.9);
  const Mat j = jacobian(m, q).topRows(2);
  Twist xd;
  xd.linear = Vec3(0.2, -0.1, 0.0);
  // with only a planar translational task the 2x2 system is square
  const Vec exact = j.fullPivLu().solve(xd.linear.head<2>());
  const Mat jp = damped_pinv(j, 1e-10);
  EXPECT_LT((jp * xd.linear.head<2>() - exact).norm(), 1e-8);
}

TEST(IkVelocity, BoundedAtSingularity) {
  RobotModel m = two_link();
  m.dq_max = Vec::Constant(2, 1e6);
  IkParams p;
  p.damping = 0.05;
  p.k_null = 0.0;
  Twist xd;
  xd.linear = Vec3(1.0, 0.3, 0.0);  // stretched arm cannot move along x
  const Vec dq = ik_velocity(m, vec2(0, 0), xd, p);
  ASSERT_TRUE(dq.allFinite());
  EXPECT_LE(dq.norm(), xd.stacked().norm() / (2 * p.damping) + 1e-12);
}

TEST(IkVelocity, DampedInverseContinuousAcrossSingularity) {
  const RobotModel m = two_link();
  Twist xd;
  xd.linear = Vec3(0.5, 0.5, 0);
  IkParams p;
  p.k_null = 0.0;
  double prev = ik_velocity(m, vec2(0, -1e-3), xd, p).norm();
  for (double e = -1e-3 + 1e-5; e <= 1e-3; e += 1e-5) {
    const double cur = ik_velocity(m, vec2(0, e), xd, p).norm();
    EXPECT_LT(std::abs(cur - prev), 0.5);
    prev = cur;
  }
}

TEST(IkVelocity, NullSpacePullDecreasesDistanceToDefault) {
  const RobotModel m = load_robot("spatial7");
  std::mt19937_64 rng(4);
  Vec q = m.q_def + testing::random_vec(rng, 7, -0.3, 0.3);
  double prev = (q - m.q_def).norm();
  for (int k = 0; k < 100; ++k) {
    q += ik_velocity(m, q, Twist{}) / kControlRate;
    const double cur = (q - m.q_def).norm();
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(IkVelocity, RejectsNegativeGains) {
  IkParams p;
  p.damping = -1;
  EXPECT_THROW(ik_velocity(two_link(), vec2(0, 0), Twist{}, p), std::invalid_argument);
}

TEST(Orientation, IdentityTo6d) {
  Vec6D expected;
  expected << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(rotation_to_6d(Mat3::Identity()), expected);
}

TEST(Orientation, SixDRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
    EXPECT_LT((rotation_from_6d(rotation_to_6d(r)) - r).norm(), 1e-9);
  }
  (void)rng;
}

TEST(Orientation, GramSchmidtOrthonormalizes) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
    const Vec six = Vec(rotation_to_6d(r)) + testing::random_vec(rng, 6, -0.2, 0.2);
    const Mat3 out = rotation_from_6d(six);
    EXPECT_TRUE(is_rotation(out));
    EXPECT_NEAR(out.determinant(), 1.0, 1e-9);
  }
}

TEST(Orientation, DegenerateSixDThrows) {
  Vec six(6);
  six << 1, 0, 0, 2, 0, 0;
  EXPECT_THROW(rotation_from_6d(six), std::invalid_argument);
}

TEST(Orientation, EulerRoundTripAndGimbalFlag) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Vec3 e = testing::random_vec(rng, 3, -1.4, 1.4);
    const auto back = rotation_to_euler_xyz(euler_xyz_to_rotation(e));
    EXPECT_FALSE(back.gimbal_lock);
    EXPECT_LT((back.angles - e).norm(), 1e-9);
  }
  const auto locked = rotation_to_euler_xyz(euler_xyz_to_rotation(Vec3(0.3, kPi / 2, 0.0)));
  EXPECT_TRUE(locked.gimbal_lock);
  EXPECT_LT((euler_xyz_to_rotation(locked.angles) -
             euler_xyz_to_rotation(Vec3(0.3, kPi / 2, 0.0)))
                .norm(),
            1e-6);
}

TEST(RobotDescription, JsonRoundTrip) {
  for (const char* robot : {"planar3", "spatial7"}) {
    const RobotModel m = load_robot(robot);
    const RobotModel back = robot_from_json(robot_to_json(m));
    EXPECT_EQ(back.n_joints(), m.n_joints());
    std::mt19937_64 rng(6);
    const Vec q = random_posture(rng, m);
    EXPECT_LT((forward_kinematics(back, q).position - forward_kinematics(m, q).position).norm(),
              1e-12);
    EXPECT_EQ(back.dq_max, m.dq_max);
  }
}

TEST(RobotDescription, ValidationRejectsBrokenModels) {
  auto j = robot_to_json(load_robot("planar3"));
  auto bad_limits = j;
  bad_limits["joints"][0]["q_min"] = 2.0;
  EXPECT_THROW(robot_from_json(bad_limits), std::invalid_argument);
  auto bad_mass = j;
  bad_mass["joints"][1]["link"]["mass"] = -1.0;
  EXPECT_THROW(robot_from_json(bad_mass), std::invalid_argument);
  auto one_joint = j;
  one_joint["joints"].erase(1);
  one_joint["joints"].erase(1);
  EXPECT_THROW(robot_from_json(one_joint), std::invalid_argument);
  EXPECT_THROW(load_robot("no_such_robot"), std::runtime_error);
}

}  // namespace
}  // namespace aspace
