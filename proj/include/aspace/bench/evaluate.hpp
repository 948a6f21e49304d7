#pragma once

// Evaluation protocols and per-space evaluation reports.
//
// Reaching runs one episode per point of the fixed goal grid. Pushing runs
// a sequence of goals with the box carried over from the previous episode;
// a box that has left the declared area is put back at a fresh start pose.
// Both use evaluation mode (success-hold termination) with the deployment
// filters as configured. Each episode is replayed in the perturbed world for
// OTE.
//
// Output: <root>/<task>/<space>/eval/{trajectories.jsonl, report.json, report.txt}

#include <fstream>

#include "aspace/bench/suite.hpp"
#include "aspace/metrics.hpp"

namespace aspace::bench {

using PolicyFn = std::function<Vec(const Vec& obs)>;

class CheckpointMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline PolicyFn zero_policy(int act_dim) {
  return [act_dim](const Vec&) { return Vec(Vec::Zero(act_dim)); };
}

inline PolicyFn deterministic(const Policy& p) {
  return [p](const Vec& obs) { return p.act(obs); };
}

/// Episodes of one policy under the task's evaluation protocol.
inline std::vector<Trajectory> run_protocol(const RunConfig& cfg, const RobotModel& model,
                                            ActionSpaceKind space, const PolicyFn& policy,
                                            std::uint64_t seed) {
  const ActionSpaceConfig ac = ActionSpaceConfig::defaults(space, model);
  std::vector<Trajectory> out;
  auto run = [&](TaskEnv& env, Vec obs) {
    while (!env.done()) obs = env.step(policy(obs)).obs;
    out.push_back(env.trajectory());
  };
  if (cfg.task.task == TaskKind::Reach) {
    const auto goals = goal_grid(cfg.task);
    for (std::size_t i = 0; i < goals.size(); ++i) {
      TaskEnv env(model, cfg.task, ac, {}, true, cfg.eval.deployment_filters);
      env.set_recording(true);
      env.set_episode_index(static_cast<int>(i));
      run(env, env.reset_to(mix_seed(seed, 0xE7A1, i), goals[i]));
    }
    return out;
  }

  std::mt19937_64 rng(mix_seed(seed, 0x9005));
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const TaskConfig& t = cfg.task;
  std::optional<BoxState> box;
  for (int i = 0; i < cfg.eval.push_goals; ++i) {
    const Vec3 goal(uniform(t.goal_min.x(), t.goal_max.x()), uniform(t.goal_min.y(), t.goal_max.y()),
                    t.contact.table_height + t.box.half_extents.z());
    TaskEnv env(model, t, ac, {}, true, cfg.eval.deployment_filters);
    env.set_recording(true);
    env.set_episode_index(i);
    run(env, env.reset_to(mix_seed(seed, 0xE7A2, static_cast<std::uint64_t>(i)), goal, box));
    BoxState next = env.state().box;
    next.vx = next.vy = next.wz = 0.0;
    const bool inside = next.x >= t.area_min.x() && next.x <= t.area_max.x() &&
                        next.y >= t.area_min.y() && next.y <= t.area_max.y();
    box = inside ? std::optional(next) : std::nullopt;
  }
  return out;
}

struct SeedChoice {
  std::uint64_t seed = 0;
  double mean_er = 0.0;
  fs::path checkpoint;
};

/// The `best` trained seeds of one space ranked by the sim ER stored in
/// their best checkpoints. Throws CheckpointMismatch if a checkpoint
/// belongs to another space or task.
inline std::vector<SeedChoice> rank_seeds(const fs::path& root, TaskKind task,
                                          ActionSpaceKind space, int best) {
  const fs::path dir = space_dir(root, task, space);
  std::vector<SeedChoice> all;
  if (!fs::exists(dir)) return all;
  for (const auto& e : fs::directory_iterator(dir)) {
    const fs::path ck = e.path() / "checkpoint_best.json";
    if (!e.is_directory() || !fs::exists(e.path() / "DONE") || !fs::exists(ck)) continue;
    const Checkpoint c = load_checkpoint(ck);
    if (c.kind != kind_name(space) || c.task != task_name(task)) {
      throw CheckpointMismatch(ck.string() + " holds a " + c.task + "/" + c.kind +
                               " policy, expected " + std::string(task_name(task)) + "/" +
                               std::string(kind_name(space)));
    }
    all.push_back(SeedChoice{c.seed, c.mean_er, ck});
  }
  std::sort(all.begin(), all.end(), [](const SeedChoice& a, const SeedChoice& b) {
    return a.mean_er != b.mean_er ? a.mean_er > b.mean_er : a.seed < b.seed;
  });
  if (static_cast<int>(all.size()) > best) all.resize(static_cast<std::size_t>(best));
  return all;
}

struct SpaceEvaluation {
  MetricRow row;
  std::vector<Trajectory> episodes;
  std::vector<OteResult> otes;
  std::vector<SeedChoice> seeds;  // empty for the stub policy
};

/// Evaluates one space: the top seeds' best checkpoints, or the zero-action
/// stub when `stub` is set. Writes the eval directory.
inline SpaceEvaluation evaluate_space(const RunConfig& cfg, const RobotModel& model,
                                      ActionSpaceKind space, const fs::path& root,
                                      bool stub = false) {
  SpaceEvaluation ev;
  const int act = action_dim(space, model.n_joints());
  if (stub) {
    ev.episodes = run_protocol(cfg, model, space, zero_policy(act), 0);
  } else {
    ev.seeds = rank_seeds(root, cfg.task.task, space, cfg.eval.best);
    if (ev.seeds.empty()) {
      throw std::runtime_error("no finished training runs under " +
                               space_dir(root, cfg.task.task, space).string());
    }
    for (const auto& s : ev.seeds) {
      const Checkpoint c = load_checkpoint(s.checkpoint);
      if (c.policy.act_dim() != act) {
        throw CheckpointMismatch(s.checkpoint.string() + ": action dimension does not match");
      }
      auto eps = run_protocol(cfg, model, space, deterministic(c.policy), s.seed);
      ev.episodes.insert(ev.episodes.end(), eps.begin(), eps.end());
    }
  }
  for (const auto& tr : ev.episodes) {
    ev.otes.push_back(ote_replay(tr, cfg.perturbation, space));
  }
  SummaryConfig sc;
  sc.eps = cfg.task.reward.eps;
  ev.row = summarize(ev.episodes, sc, ev.otes);

  const fs::path dir = space_dir(root, cfg.task.task, space) / (stub ? "eval_stub" : "eval");
  fs::create_directories(dir);
  write_trajectories(dir / "trajectories.jsonl", ev.episodes);
  MetricReport rep;
  rep.rows.push_back(ev.row);
  nlohmann::json j = to_json(rep);
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : ev.seeds) seeds.push_back({{"seed", s.seed}, {"sim_er", s.mean_er}});
  j["seeds"] = seeds;
  j["perturbation"] = to_json(cfg.perturbation);
  j["deployment_filters"] = cfg.eval.deployment_filters;
  std::ofstream(dir / "report.json") << j.dump(2) << '\n';
  std::ofstream(dir / "report.txt") << render_table(rep);
  return ev;
}

}  // namespace aspace::bench
