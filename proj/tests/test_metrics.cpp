#include <gtest/gtest.h>

#include <sstream>

#include "aspace/bench/run_config.hpp"
#include "aspace/scripted_policy.hpp"
#include "test_util.hpp"

namespace aspace {
namespace {

using testing::synthetic_log;

const Vec kLo = Vec::Constant(3, -1.0);
const Vec kHi = Vec::Constant(3, 1.0);

ConstraintSet planar_constraints() { return ConstraintSet::from_model(load_robot("planar3")); }

// A log over the joint stream `q` whose v_d and v are all zero.
Trajectory stream_log(const std::vector<Vec>& q) {
  const std::vector<Vec> z(q.size() - 1, Vec::Zero(3));
  return synthetic_log(q, z, z, kLo, kHi);
}

TEST(Ecv, StationaryStreamIsZero) {
  EXPECT_EQ(ecv({stream_log(std::vector<Vec>(11, Vec::Constant(3, 0.2)))}, planar_constraints()),
            0.0);
}

TEST(Ecv, FastRampIsOne) {
  const ConstraintSet cs = planar_constraints();
  std::vector<Vec> q;
  for (int k = 0; k <= 10; ++k) q.push_back(2.0 * cs.dq_max * cs.dt * k);
  EXPECT_EQ(ecv({stream_log(q)}, cs), 1.0);
}

TEST(Ecv, SingleBumpFlagsThreeOfTenSteps) {
  const ConstraintSet cs = planar_constraints();
  std::vector<Vec> q(11, Vec::Zero(3));
  // the bump breaks the acceleration bound on the three stencils touching it
  q[5][1] = 0.9 * cs.dq_max[1] * cs.dt;
  const Trajectory tr = stream_log(q);
  EXPECT_DOUBLE_EQ(ecv({tr}, cs), 0.3);
  const Ratio r = ecv_counts({tr, tr}, cs);
  EXPECT_EQ(r.hits, 6);
  EXPECT_EQ(r.total, 20);
}

TEST(Ecv, EmptyInputThrows) {
  EXPECT_THROW(ecv({}, planar_constraints()), std::invalid_argument);
}

// A log with explicit per-step v_d and v; every second step is a policy step.
Trajectory nte_log(const std::vector<Vec>& v_d, const std::vector<Vec>& v) {
  const std::vector<Vec> q(v_d.size() + 1, Vec::Zero(3));
  return synthetic_log(q, v_d, v, kLo, kHi);
}

TEST(Nte, PerfectTrackingIsZero) {
  std::mt19937_64 rng(1);
  std::vector<Vec> v_d, v;
  for (int k = 0; k < 20; ++k) v_d.push_back(testing::random_vec(rng, 3, -1, 1));
  // v at policy step t + 1 equals v_d at policy step t
  for (int k = 0; k < 20; ++k) v.push_back(k >= 2 ? v_d[k - 2] : Vec::Zero(3));
  EXPECT_EQ(nte(nte_log(v_d, v)), 0.0);
}

TEST(Nte, OppositeExtremesIsOne) {
  const std::vector<Vec> v_d(20, kHi), v(20, kLo);
  EXPECT_EQ(nte(nte_log(v_d, v)), 1.0);
}

TEST(Nte, FiveStepsByHand) {
  // policy steps start at controller steps 0, 2, ..., 10: five NTE terms
  std::vector<Vec> v_d(12, Vec::Zero(3)), v(12, Vec::Zero(3));
  const double e[5][3] = {{0.2, 0, 0}, {0, 0.4, 0}, {0.1, 0.1, 0.1}, {0, 0, 0}, {1.0, 0.5, 0}};
  for (int t = 0; t < 5; ++t) {
    for (int i = 0; i < 3; ++i) v[2 * (t + 1)][i] = v_d[2 * t][i] - e[t][i];
  }
  const auto terms = nte_terms(nte_log(v_d, v));
  ASSERT_EQ(terms.size(), 5u);
  double total = 0.0;
  for (int t = 0; t < 5; ++t) {
    const double expected = (e[t][0] + e[t][1] + e[t][2]) / 3.0 / 2.0;  // range is 2
    EXPECT_NEAR(terms[t], expected, 1e-15);
    total += expected;
  }
  EXPECT_NEAR(nte(nte_log(v_d, v)), total / 5.0, 1e-15);
}

TEST(Nte, InvariantUnderAffineRescaling) {
  std::mt19937_64 rng(2);
  std::vector<Vec> v_d, v;
  for (int k = 0; k < 30; ++k) {
    v_d.push_back(testing::random_vec(rng, 3, -1, 1));
    v.push_back(testing::random_vec(rng, 3, -1, 1));
  }
  const Trajectory a = nte_log(v_d, v);
  const Vec scale = Vec3(3.0, 0.5, 10.0), shift = Vec3(-2.0, 7.0, 0.1);
  auto map = [&](const Vec& x) -> Vec { return x.cwiseProduct(scale) + shift; };
  std::vector<Vec> v_d2, v2;
  for (const auto& x : v_d) v_d2.push_back(map(x));
  for (const auto& x : v) v2.push_back(map(x));
  const std::vector<Vec> q(v_d.size() + 1, Vec::Zero(3));
  const Trajectory b = synthetic_log(q, v_d2, v2, map(kLo), map(kHi));
  EXPECT_NEAR(nte(a), nte(b), 1e-12);
}

TEST(Nte, NeedsTwoPolicySteps) {
  EXPECT_THROW(nte(nte_log({kHi}, {kLo})), std::invalid_argument);
}

// Scripted reach episodes recorded in the nominal world.
Trajectory scripted(ActionSpaceKind k, std::uint64_t seed, const Vec3& goal,
                    bool evaluation = false) {
  const RobotModel m = load_robot("planar3");
  TaskEnv env(m, bench::default_task(TaskKind::Reach), ActionSpaceConfig::defaults(k, m), {},
              evaluation);
  return scripted_episode(env, seed, goal);
}

TEST(Ote, SelfReplayIsExactlyZeroForEverySpace) {
  for (ActionSpaceKind k : kAllKinds) {
    for (bool evaluation : {false, true}) {
      const Trajectory tr = scripted(k, 3, Vec3(0.45, 0.0, 0.3), evaluation);
      const OteResult r = ote_replay(tr, Perturbation{}, k);
      EXPECT_EQ(r.mean, 0.0) << kind_name(k) << (evaluation ? " filtered" : "");
      EXPECT_EQ(r.per_step.size(), tr.steps.size());
    }
  }
}

TEST(Ote, GrowsWithTheMassMismatchForTorqueControl) {
  const Trajectory tr = scripted(ActionSpaceKind::JT, 4, Vec3(0.5, 0.0, 0.25));
  double prev = 0.0;
  for (double s : {1.05, 1.1, 1.2, 1.4}) {
    Perturbation p;
    p.mass_scale = s;
    const double o = ote_replay(tr, p).mean;
    EXPECT_GT(o, prev) << "mass scale " << s;
    prev = o;
  }
}

TEST(Ote, TorqueControlDriftsMoreThanVelocityControl) {
  Perturbation standard;
  standard.mass_scale = 1.2;
  standard.friction_scale = 1.3;
  standard.control_delay_steps = 1;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Vec3 goal(0.35 + 0.05 * seed, 0.0, 0.3);
    const double jt = ote_replay(scripted(ActionSpaceKind::JT, seed, goal), standard).mean;
    const double jv = ote_replay(scripted(ActionSpaceKind::JV, seed, goal), standard).mean;
    EXPECT_GT(jt, jv) << "seed " << seed;
  }
}

TEST(Ote, KindMismatchThrows) {
  const Trajectory tr = scripted(ActionSpaceKind::JV, 1, Vec3(0.45, 0.0, 0.3));
  EXPECT_THROW(ote_replay(tr, Perturbation{}, ActionSpaceKind::JP), std::invalid_argument);
}

// A log ending at `d` from its goal, with return `ret`.
Trajectory ending_at(double d, double ret) {
  Trajectory tr = stream_log(std::vector<Vec>(5, Vec::Zero(3)));
  for (auto& s : tr.steps) {
    s.goal = Vec3(0.4, 0.0, 0.3);
    s.ee = s.goal + Vec3(0.0, 0.0, d);
  }
  tr.steps.back().reward = ret;
  return tr;
}

TEST(Summarize, SuccessRateAndAccuracy) {
  const MetricRow r = summarize({ending_at(0.01, 1.0), ending_at(0.03, 3.0)}, SummaryConfig{});
  EXPECT_EQ(r.episodes, 2);
  EXPECT_DOUBLE_EQ(r.sr, 50.0);
  EXPECT_NEAR(r.acc_cm, 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.er_mean, 2.0);
  EXPECT_EQ(r.space, "JP");
  EXPECT_FALSE(r.ote.has_value());
}

TEST(Summarize, SingleEpisodeAtTheGoal) {
  const MetricRow r = summarize({ending_at(0.0, 5.0)}, SummaryConfig{});
  EXPECT_DOUBLE_EQ(r.sr, 100.0);
  EXPECT_EQ(r.acc_cm, 0.0);
  EXPECT_EQ(r.er_p5, 5.0);
  EXPECT_EQ(r.er_p95, 5.0);
  ASSERT_TRUE(r.ecv.has_value());
  EXPECT_EQ(*r.ecv, 0.0);
}

TEST(Summarize, EmptyInputThrows) {
  EXPECT_THROW(summarize({}, SummaryConfig{}), std::invalid_argument);
}

std::vector<Trajectory> mixed_episodes() {
  std::vector<Trajectory> trs;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  for (int i = 0; i < 12; ++i) trs.push_back(ending_at(u(rng), u(rng) * 100));
  return trs;
}

void expect_same_row(const MetricRow& a, const MetricRow& b) {
  EXPECT_EQ(a.episodes, b.episodes);
  EXPECT_NEAR(a.er_mean, b.er_mean, 1e-12);
  EXPECT_NEAR(a.er_p5, b.er_p5, 1e-12);
  EXPECT_NEAR(a.er_p95, b.er_p95, 1e-12);
  EXPECT_EQ(a.sr, b.sr);
  EXPECT_NEAR(a.acc_cm, b.acc_cm, 1e-12);
  EXPECT_EQ(a.ecv, b.ecv);
  ASSERT_TRUE(a.nte && b.nte);
  EXPECT_NEAR(*a.nte, *b.nte, 1e-12);
}

TEST(Summarize, MergingAccumulatorsEqualsOneFold) {
  const auto trs = mixed_episodes();
  MetricAccumulator all, left, right;
  for (std::size_t i = 0; i < trs.size(); ++i) {
    accumulate(all, trs[i], SummaryConfig{});
    accumulate(i < 5 ? left : right, trs[i], SummaryConfig{});
  }
  left.merge(right);
  expect_same_row(finish(all, "JP", "reach"), finish(left, "JP", "reach"));
}

TEST(Summarize, OrderDoesNotMatter) {
  auto trs = mixed_episodes();
  const MetricRow a = summarize(trs, SummaryConfig{});
  std::reverse(trs.begin(), trs.end());
  expect_same_row(a, summarize(trs, SummaryConfig{}));
}

TEST(Summarize, RecomputedEcvMatchesRecordedFlags) {
  const RobotModel m = load_robot("planar3");
  std::vector<Trajectory> trs;
  for (std::uint64_t s = 0; s < 3; ++s) trs.push_back(scripted(ActionSpaceKind::JP, s, Vec3(0.5, 0, 0.2)));
  EXPECT_EQ(ecv(trs, ConstraintSet::from_model(m)), ecv_recorded(trs));
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
  EXPECT_EQ(percentile(xs, 0), 1.0);
  EXPECT_EQ(percentile(xs, 100), 4.0);
  EXPECT_DOUBLE_EQ(percentile(xs, 50), 2.5);
  EXPECT_DOUBLE_EQ(percentile(xs, 25), 1.75);
  EXPECT_THROW(percentile({}, 50), std::invalid_argument);
}

TEST(Trajectory, RoundTripThroughText) {
  const Trajectory tr = scripted(ActionSpaceKind::MI_CV, 2, Vec3(0.4, 0.0, 0.35));
  std::stringstream ss;
  write_trajectory(ss, tr);
  write_trajectory(ss, tr);
  const auto back = read_trajectories(ss);
  ASSERT_EQ(back.size(), 2u);
  const Trajectory& b = back[0];
  EXPECT_EQ(b.header.kind, tr.header.kind);
  EXPECT_EQ(b.header.robot, tr.header.robot);
  ASSERT_EQ(b.steps.size(), tr.steps.size());
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    EXPECT_TRUE(b.steps[k].q == tr.steps[k].q) << k;
    EXPECT_TRUE(b.steps[k].a == tr.steps[k].a) << k;
    EXPECT_EQ(b.steps[k].reward, tr.steps[k].reward) << k;
  }
  EXPECT_EQ(ote_replay(b, Perturbation{}).mean, 0.0);
}

TEST(Trajectory, CorruptLineIsReported) {
  const Trajectory tr = scripted(ActionSpaceKind::JV, 2, Vec3(0.4, 0.0, 0.35));
  std::stringstream ss;
  write_trajectory(ss, tr);
  std::string text = ss.str();
  // break the third line
  std::size_t pos = 0;
  for (int i = 0; i < 2; ++i) pos = text.find('\n', pos) + 1;
  text.insert(pos, "{oops");
  std::stringstream bad(text);
  try {
    read_trajectories(bad);
    FAIL() << "corrupt input accepted";
  } catch (const TrajectoryFormatError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Trajectory, StepBeforeHeaderIsRejected) {
  std::stringstream ss(R"({"type": "step"})");
  EXPECT_THROW(read_trajectories(ss), TrajectoryFormatError);
}

TEST(Report, JsonRoundTripAndPlaceholderRows) {
  MetricReport rep;
  rep.rows.push_back(summarize({ending_at(0.01, 1.0)}, SummaryConfig{}));
  const MetricReport back = report_from_json(to_json(rep));
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_EQ(to_json(back.rows[0]), to_json(rep.rows[0]));
  const std::string table = render_table(back, {"JT", "JP"}, {"reach"});
  std::istringstream lines(table);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_EQ(all.size(), 4u);  // header, rule, two rows
  EXPECT_NE(all[2].find("JT"), std::string::npos);
  EXPECT_NE(all[2].find(" -"), std::string::npos);
  EXPECT_NE(all[3].find("100"), std::string::npos);
}

}  // namespace
}  // namespace aspace
