#include <gtest/gtest.h>

#include "aspace/bench/run_config.hpp"
#include "aspace/scripted_policy.hpp"
#include "test_util.hpp"

namespace aspace {
namespace {

using bench::default_task;

RewardInput at_rest(const RobotModel& m, const Vec3& ee, const Vec3& goal) {
  RewardInput s;
  s.q = m.q_def;
  s.dq = Vec::Zero(m.n_joints());
  s.ee = ee;
  s.goal = goal;
  return s;
}

double limit_sum(const RobotModel& m, const Vec& q) {
  double s = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    const double lo = q[i] - m.q_min[i], hi = m.q_max[i] - q[i];
    const double d = std::min(lo, hi);
    s += std::exp(-30.0 * d * d);
  }
  return s;
}

TEST(Reward, ReachAtGoalAtRest) {
  const RobotModel m = load_robot("planar3");
  const RewardConfig c = default_task(TaskKind::Reach).reward;
  const Vec3 g(0.4, 0.0, 0.3);
  const Vec a = Vec::Constant(3, 0.2);
  const double r = reward_reach(at_rest(m, g, g), a, a, m, c);
  EXPECT_NEAR(r, c.lambda_r + c.lambda_eps + 1.0 - c.lambda_l * limit_sum(m, m.q_def), 1e-12);
}

TEST(Reward, EachPenaltyByHand) {
  const RobotModel m = load_robot("planar3");
  RewardConfig c;
  RewardInput s = at_rest(m, Vec3(0.5, 0, 0.3), Vec3(0.4, 0, 0.3));
  s.q = m.q_def + Vec3(0.1, -0.2, 0.0);
  s.dq = Vec3(0.3, 0.0, -0.4);
  const Vec a = Vec3(0.5, 0.5, 0.5), a_prev = Vec3(0.5, 0.2, 0.1);
  const RewardTerms t = reward_reach_terms(s, a, a_prev, m, c);
  EXPECT_NEAR(t.dist, c.lambda_r / (1.0 + 0.01), 1e-12);
  EXPECT_EQ(t.exact, 0.0);
  EXPECT_NEAR(t.vel, c.lambda_q * 0.25, 1e-12);
  EXPECT_NEAR(t.smooth, c.lambda_s * 0.5, 1e-12);
  EXPECT_NEAR(t.neutral, c.lambda_n * std::sqrt(0.05), 1e-12);
  EXPECT_NEAR(t.limit, c.lambda_l * limit_sum(m, s.q), 1e-12);
  EXPECT_NEAR(t.total(), t.dist - t.vel - t.smooth - t.neutral - t.limit, 1e-12);
}

TEST(Reward, AllWeightsZeroOutsideTheGoalIsZero) {
  const RobotModel m = load_robot("planar3");
  RewardConfig c;
  c.lambda_r = c.lambda_eps = c.lambda_q = c.lambda_n = c.lambda_l = c.lambda_s = c.lambda_c = 0;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    RewardInput s = at_rest(m, testing::random_vec(rng, 3, 0, 1), testing::random_vec(rng, 3, 2, 3));
    s.q = testing::random_posture(rng, m);
    s.dq = testing::random_vec(rng, 3, -1, 1);
    const Vec a = testing::random_vec(rng, 3, -1, 1), b = testing::random_vec(rng, 3, -1, 1);
    EXPECT_EQ(reward_reach(s, a, b, m, c), 0.0);
  }
}

TEST(Reward, ExactTermGateIsStrict) {
  const RobotModel m = load_robot("planar3");
  RewardConfig c;
  const Vec3 g(0.4, 0.0, 0.3);
  const Vec a = Vec::Zero(3);
  EXPECT_EQ(reward_reach_terms(at_rest(m, g + Vec3(c.eps, 0, 0), g), a, a, m, c).exact, 0.0);
  EXPECT_EQ(reward_reach_terms(at_rest(m, g + Vec3(0.5 * c.eps, 0, 0), g), a, a, m, c).exact,
            c.lambda_eps + 1.0);
  RewardInput moving = at_rest(m, g, g);
  moving.dq = Vec3(0.1, 0, 0);  // 1 / (1 + 100 * 0.01) = 0.5
  EXPECT_NEAR(reward_reach_terms(moving, a, a, m, c).exact, c.lambda_eps + 0.5, 1e-12);
}

TEST(Reward, DistanceTermHalvesAtScale) {
  const RobotModel m = load_robot("planar3");
  RewardConfig c;
  c.dist_scale = 0.1;
  const Vec3 g(0.4, 0.0, 0.3);
  const Vec a = Vec::Zero(3);
  EXPECT_NEAR(reward_reach_terms(at_rest(m, g + Vec3(0, 0, 0.1), g), a, a, m, c).dist,
              0.5 * c.lambda_r, 1e-12);
  double prev = 1e9;
  for (double d = 0.0; d < 1.0; d += 0.01) {
    const double r = reward_reach_terms(at_rest(m, g + Vec3(d, 0, 0), g), a, a, m, c).dist;
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Reward, TableCollisionPenalty) {
  const RobotModel m = load_robot("planar3");
  RewardConfig c;
  const Vec a = Vec::Zero(3);
  RewardInput s = at_rest(m, Vec3(0.4, 0, 0.01), Vec3(0.5, 0, 0.05));
  EXPECT_EQ(reward_push_terms(s, a, a, m, c).col, c.lambda_c);
  s.ee.z() = 0.05;
  EXPECT_EQ(reward_push_terms(s, a, a, m, c).col, 0.0);
}

TEST(Reward, PushAllPositiveTerms) {
  const RobotModel m = load_robot("planar3");
  const RewardConfig c = default_task(TaskKind::Push).reward;
  RewardInput s = at_rest(m, Vec3(0.4, 0, 0.05), Vec3(0.5, 0, 0.05));
  s.ee_object_gap = 0.0;
  s.object = Eigen::Vector2d(0.5, 0.0);
  s.push_goal = Eigen::Vector2d(0.5, 0.0);
  const Vec a = Vec::Zero(3);
  const double expected =
      c.lambda_r + c.lambda_eps + 1.0 + c.lambda_r - c.lambda_l * limit_sum(m, m.q_def);
  EXPECT_NEAR(reward_push(s, a, a, m, c), expected, 1e-12);
}

TEST(TipBoxGap, ByHand) {
  const BoxParams box;
  const ContactParams cp;
  const BoxState b{0.5, 0.0, 0.0, 0, 0, 0};
  const double zc = cp.table_height + box.half_extents.z();
  // straight out from the -x face
  EXPECT_NEAR(tip_box_gap(Vec3(0.3, 0, zc), b, box, cp), 0.15 - cp.tip_radius, 1e-12);
  // diagonally off an edge
  const Vec3 corner(0.5 - 0.05 - 0.03, 0.05 + 0.04, zc);
  EXPECT_NEAR(tip_box_gap(corner, b, box, cp), 0.05 - cp.tip_radius, 1e-12);
  // touching or inside clamps at zero
  EXPECT_EQ(tip_box_gap(Vec3(0.5, 0, zc), b, box, cp), 0.0);
  // a yawed box: the face normal rotates with it
  const BoxState yawed{0.5, 0.0, kPi / 2, 0, 0, 0};
  EXPECT_NEAR(tip_box_gap(Vec3(0.5, 0.2, zc), yawed, box, cp), 0.15 - cp.tip_radius, 1e-12);
}

TaskEnv reach_env(ActionSpaceKind k = ActionSpaceKind::JV, bool evaluation = false) {
  const RobotModel m = load_robot("planar3");
  return TaskEnv(m, default_task(TaskKind::Reach), ActionSpaceConfig::defaults(k, m), {},
                 evaluation);
}

TaskEnv push_env(ActionSpaceKind k = ActionSpaceKind::JV, bool evaluation = false) {
  const RobotModel m = load_robot("planar3");
  return TaskEnv(m, default_task(TaskKind::Push), ActionSpaceConfig::defaults(k, m), {},
                 evaluation);
}

TEST(TaskEnv, ResetIsDeterministicPerSeed) {
  TaskEnv a = reach_env(), b = reach_env();
  EXPECT_TRUE(a.reset(42) == b.reset(42));
  EXPECT_TRUE(a.goal() == b.goal());
  EXPECT_FALSE(a.reset(43) == b.reset(42));
}

TEST(TaskEnv, ObservationLayout) {
  TaskEnv env = reach_env();
  const Vec o = env.reset(3);
  ASSERT_EQ(o.size(), env.obs_dim());
  EXPECT_TRUE(o.head(3) == env.state().joints.q);
  EXPECT_TRUE(o.segment(3, 3) == env.state().joints.dq);
  EXPECT_TRUE(o.segment(6, 3) == env.ee());
  EXPECT_TRUE(o.segment(9, 3) == env.goal());
  TaskEnv p = push_env();
  const Vec op = p.reset(3);
  ASSERT_EQ(op.size(), p.obs_dim());
  EXPECT_EQ(op[op.size() - 4], p.state().box.x);
}

TEST(TaskEnv, InitialPostureNoiseIsBounded) {
  TaskEnv env = reach_env();
  const RobotModel& m = env.model();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    env.reset(seed);
    const Vec dq0 = env.state().joints.q - m.q_def;
    EXPECT_LE(dq0.cwiseAbs().maxCoeff(), env.task().init_noise);
    EXPECT_EQ(env.state().joints.dq.norm(), 0.0);
  }
}

// Pearson statistic of `xs` against a uniform over [lo, hi] in `bins` bins.
double chi_square_uniform(const std::vector<double>& xs, double lo, double hi, int bins) {
  std::vector<int> counts(bins, 0);
  for (double x : xs) {
    const int b = std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins));
    ++counts[b];
  }
  const double expected = static_cast<double>(xs.size()) / bins;
  double chi = 0.0;
  for (int c : counts) chi += square(c - expected) / expected;
  return chi;
}

TEST(TaskEnv, ReachGoalsAreUniformOverTheWorkspace) {
  TaskEnv env = reach_env();
  const TaskConfig& t = env.task();
  std::vector<double> xs, zs;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    env.reset(seed);
    const Vec3 g = env.goal();
    ASSERT_TRUE((g.array() >= t.workspace_min.array()).all());
    ASSERT_TRUE((g.array() <= t.workspace_max.array()).all());
    xs.push_back(g.x());
    zs.push_back(g.z());
  }
  // 9 degrees of freedom: 27.88 is the 0.1% critical value
  EXPECT_LT(chi_square_uniform(xs, t.workspace_min.x(), t.workspace_max.x(), 10), 27.88);
  EXPECT_LT(chi_square_uniform(zs, t.workspace_min.z(), t.workspace_max.z(), 10), 27.88);
}

TEST(TaskEnv, PushBoxAndGoalStartInsideTheirAreas) {
  TaskEnv env = push_env();
  const TaskConfig& t = env.task();
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    env.reset(seed);
    const BoxState& b = env.state().box;
    EXPECT_GE(b.x, t.box_min.x());
    EXPECT_LE(b.x, t.box_max.x());
    EXPECT_GE(b.y, t.box_min.y());
    EXPECT_LE(b.y, t.box_max.y());
    EXPECT_GE(env.goal().x(), t.goal_min.x());
    EXPECT_LE(env.goal().x(), t.goal_max.x());
    EXPECT_DOUBLE_EQ(env.goal().z(), t.contact.table_height + t.box.half_extents.z());
    EXPECT_GE(env.box().friction_coeff, t.randomization.friction.lo);
    EXPECT_LE(env.box().mass, t.randomization.mass.hi);
  }
}

TEST(TaskEnv, EvaluationKeepsNominalBoxParameters) {
  TaskEnv env = push_env(ActionSpaceKind::JV, true);
  env.reset(5);
  EXPECT_EQ(env.box().mass, env.task().box.mass);
  EXPECT_EQ(env.box().friction_coeff, env.task().box.friction_coeff);
}

TEST(DomainRandomize, DegenerateRangeIsExact) {
  std::mt19937_64 rng(1);
  RandomizationRanges r;
  r.friction = {0.4, 0.4};
  r.mass = {0.7, 0.7};
  const BoxParams b = domain_randomize(BoxParams{}, r, rng);
  EXPECT_EQ(b.friction_coeff, 0.4);
  EXPECT_EQ(b.mass, 0.7);
}

TEST(DomainRandomize, MeansMatchTheRanges) {
  std::mt19937_64 rng(2);
  const RandomizationRanges r;
  const int n = 10000;
  double fm = 0.0, mm = 0.0;
  for (int i = 0; i < n; ++i) {
    const BoxParams b = domain_randomize(BoxParams{}, r, rng);
    ASSERT_GT(b.friction_coeff, 0.0);
    ASSERT_GE(b.mass, r.mass.lo);
    ASSERT_LE(b.mass, r.mass.hi);
    fm += b.friction_coeff / n;
    mm += b.mass / n;
  }
  // uniform standard error: width / sqrt(12 n)
  const double se_f = (r.friction.hi - r.friction.lo) / std::sqrt(12.0 * n);
  const double se_m = (r.mass.hi - r.mass.lo) / std::sqrt(12.0 * n);
  EXPECT_NEAR(fm, 0.5 * (r.friction.lo + r.friction.hi), 3 * se_f);
  EXPECT_NEAR(mm, 0.5 * (r.mass.lo + r.mass.hi), 3 * se_m);
}

TEST(DomainRandomize, RejectsInvertedRange) {
  std::mt19937_64 rng(3);
  RandomizationRanges r;
  r.mass = {0.8, 0.3};
  EXPECT_THROW(domain_randomize(BoxParams{}, r, rng), std::invalid_argument);
}

TEST(TaskEnv, HorizonOneEndsAfterOneStep) {
  const RobotModel m = load_robot("planar3");
  TaskConfig t = default_task(TaskKind::Reach);
  t.reward.horizon = 1;
  TaskEnv env(m, t, ActionSpaceConfig::defaults(ActionSpaceKind::JV, m));
  env.reset(1);
  const EnvStep s = env.step(Vec::Zero(3));
  EXPECT_TRUE(s.done);
  EXPECT_THROW(env.step(Vec::Zero(3)), std::logic_error);
}

TEST(TaskEnv, ZeroVelocityCommandHoldsPosture) {
  const RobotModel m = load_robot("planar3");
  TaskConfig t = default_task(TaskKind::Reach);
  t.init_noise = 0.0;
  TaskEnv env(m, t, ActionSpaceConfig::defaults(ActionSpaceKind::JV, m));
  env.reset(1);
  const Vec q0 = env.state().joints.q;
  for (int k = 0; k < 60; ++k) env.step(Vec::Zero(3));  // one second
  EXPECT_LT((env.state().joints.q - q0).norm(), 1e-4);
}

TEST(TaskEnv, RecordedReturnIsTheSumOfRewards) {
  TaskEnv env = reach_env();
  env.set_recording(true);
  env.reset(9);
  std::mt19937_64 rng(9);
  double sum = 0.0;
  int steps = 0;
  while (!env.done()) {
    sum += env.step(testing::random_vec(rng, 3, -1, 1)).reward;
    ++steps;
  }
  EXPECT_EQ(steps, env.task().reward.horizon);
  const Trajectory& tr = env.trajectory();
  EXPECT_EQ(static_cast<int>(tr.steps.size()), 2 * steps);  // two control steps per action
  EXPECT_NEAR(tr.episode_return(), sum, 1e-9);
  EXPECT_NEAR(tr.final_distance(), env.distance(), 1e-12);
}

TEST(TaskEnv, EvaluationStopsAfterHoldingTheGoal) {
  TaskEnv env = reach_env(ActionSpaceKind::JV, true);
  const Trajectory tr = scripted_episode(env, 4, Vec3(0.45, 0.0, 0.3));
  const int policy_steps = static_cast<int>(tr.steps.size()) / 2;
  EXPECT_LT(policy_steps, env.task().reward.horizon);
  EXPECT_LT(tr.final_distance(), env.task().reward.eps);
}

TEST(GoalGrid, CoversTheWorkspaceCorners) {
  const TaskConfig t = default_task(TaskKind::Reach);
  const auto g = goal_grid(t);
  ASSERT_EQ(g.size(), 9u);  // y is degenerate
  EXPECT_LT((g.front() - t.workspace_min).norm(), 1e-12);
  EXPECT_LT((g.back() - t.workspace_max).norm(), 1e-12);
}

TEST(TaskConfig, JsonRoundTrip) {
  TaskConfig t = default_task(TaskKind::Push);
  t.reward.lambda_c = 2.5;
  t.randomization.mass = {0.1, 0.2};
  const TaskConfig back = task_from_json(to_json(t));
  EXPECT_EQ(to_json(back), to_json(t));
}

TEST(TaskConfig, ValidationRejectsBadRegions) {
  TaskConfig t;
  t.workspace_min.x() = 1.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  TaskConfig u;
  u.reward.eps = -1.0;
  EXPECT_THROW(u.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace aspace
