#pragma once

// Training cells and the resumable suite runner.
//
// A cell is one (task, space, seed) training run. It owns
// <root>/<task>/<space>/seed<k>/ and writes, in order:
//   checkpoint_last.json, checkpoint_best.json, curve.csv, samples.jsonl,
//   config.json, DONE
// DONE is written last, so a directory without it is an interrupted run
// and is retrained from scratch.

#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "aspace/bench/run_config.hpp"

namespace aspace::bench {

struct Cell {
  TaskKind task = TaskKind::Reach;
  ActionSpaceKind space = ActionSpaceKind::JV;
  std::uint64_t seed = 0;

  std::string name() const {
    return std::string(task_name(task)) + "/" + std::string(kind_name(space)) + "/seed" +
           std::to_string(seed);
  }
};

inline fs::path space_dir(const fs::path& root, TaskKind task, ActionSpaceKind space) {
  return root / std::string(task_name(task)) / std::string(kind_name(space));
}

inline fs::path cell_dir(const fs::path& root, const Cell& c) {
  return space_dir(root, c.task, c.space) / ("seed" + std::to_string(c.seed));
}

inline bool cell_done(const fs::path& root, const Cell& c) {
  return fs::exists(cell_dir(root, c) / "DONE");
}

/// Every (space, seed) pair of the config, spaces outermost.
inline std::vector<Cell> plan_cells(const RunConfig& cfg) {
  std::vector<Cell> out;
  for (auto k : cfg.spaces) {
    for (auto s : cfg.seeds) out.push_back(Cell{cfg.task.task, k, s});
  }
  return out;
}

inline void write_curve_csv(const fs::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(10);
  out << "iteration,env_steps,mean_er,success,distance,episodes,policy_loss,value_loss,approx_kl\n";
  for (const auto& c : curve) {
    out << c.iteration << ',' << c.env_steps << ',' << c.mean_er << ',' << c.success << ','
        << c.distance << ',' << c.episodes << ',' << c.policy_loss << ',' << c.value_loss << ','
        << c.approx_kl << '\n';
  }
}

/// (env_steps, mean_er) pairs of a curve file; rows without finished
/// episodes are skipped.
inline std::vector<std::pair<double, double>> read_curve_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::pair<double, double>> out;
  long n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      f.push_back(line.substr(start, end - start));
      start = end + 1;
    }
    if (f.size() < 3) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(n) + ": too few fields");
    }
    const double steps = std::stod(f[1]);
    const double er = std::stod(f[2]);
    if (std::isfinite(er)) out.emplace_back(steps, er);
  }
  return out;
}

/// Deterministic episodes of `policy` in the training world.
inline std::vector<Trajectory> sample_episodes(const RobotModel& m, const TaskConfig& task,
                                               const ActionSpaceConfig& ac, const Policy& policy,
                                               std::uint64_t seed, int n) {
  std::vector<Trajectory> out;
  for (int e = 0; e < n; ++e) {
    TaskEnv env(m, task, ac);
    env.set_recording(true);
    env.set_episode_index(e);
    Vec obs = env.reset(mix_seed(seed, 0x5A3B1E, static_cast<std::uint64_t>(e)));
    while (!env.done()) obs = env.step(policy.act(obs)).obs;
    out.push_back(env.trajectory());
  }
  return out;
}

/// Trains one cell and writes its artifacts.
inline TrainResult train_cell(const RunConfig& cfg, const RobotModel& model, const Cell& cell,
                              const fs::path& root,
                              const std::function<void(const CurvePoint&)>& progress = {}) {
  const fs::path dir = cell_dir(root, cell);
  fs::create_directories(dir);
  fs::remove(dir / "DONE");
  TaskConfig task = cfg.task;
  task.task = cell.task;
  const ActionSpaceConfig ac = ActionSpaceConfig::defaults(cell.space, model);
  TrainResult res = train(
      [&](int) { return TaskEnv(model, task, ac); }, cfg.ppo, cell.seed, progress);

  auto checkpoint = [&](const Policy& p, double er) {
    Checkpoint c;
    c.policy = p;
    c.kind = std::string(kind_name(cell.space));
    c.task = std::string(task_name(cell.task));
    c.robot = cfg.robot;
    c.seed = cell.seed;
    c.env_steps = res.curve.empty() ? 0 : res.curve.back().env_steps;
    c.mean_er = er;
    c.extra = {{"task_config", to_json(task)}, {"ppo", to_json(cfg.ppo)}};
    return c;
  };
  const double last_er = res.curve.empty() ? 0.0 : res.curve.back().mean_er;
  save_checkpoint(dir / "checkpoint_last.json",
                  checkpoint(res.last, std::isfinite(last_er) ? last_er : 0.0));
  save_checkpoint(dir / "checkpoint_best.json",
                  checkpoint(res.best, std::isfinite(res.best_er) ? res.best_er : 0.0));
  write_curve_csv(dir / "curve.csv", res.curve);
  write_trajectories(dir / "samples.jsonl",
                     sample_episodes(model, task, ac, res.best, cell.seed, cfg.eval.samples));
  {
    std::ofstream out(dir / "config.json");
    out << to_json(cfg).dump(2) << '\n';
  }
  std::ofstream(dir / "DONE") << "ok\n";
  return res;
}

struct SuiteStatus {
  int ran = 0, skipped = 0;
};

/// Runs `job` on every cell not yet marked DONE, `workers` at a time.
/// The first failure is rethrown after the running cells finish.
inline SuiteStatus run_suite(const std::vector<Cell>& cells, const fs::path& root, int workers,
                             const std::function<void(const Cell&)>& job) {
  std::vector<Cell> todo;
  SuiteStatus st;
  for (const auto& c : cells) {
    if (cell_done(root, c)) {
      ++st.skipped;
    } else {
      todo.push_back(c);
    }
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size() && !failed; i = next++) {
      try {
        job(todo[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(todo.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  st.ran = static_cast<int>(todo.size());
  return st;
}

}  // namespace aspace::bench
