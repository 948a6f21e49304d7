#pragma once

// Run configuration for the command-line tools.
//
//   {
//     "task": "reach",                  // or "push"
//     "task_config": "tasks/reach.json",  // optional; relative to the config dir
//     "task_overrides": {...},          // merged over the task file
//     "reward": {...},                  // merged over the task reward
//     "spaces": "all" | ["jv", ...],
//     "seeds": "0..2" | [0, 1, 2],
//     "robot": "planar3",               // name under config/robots or a path
//     "ppo": {...},
//     "eval": {"best": 3, "deployment_filters": true, "push_goals": 10},
//     "perturbation": {"mass_scale": 1.2, "friction_scale": 1.3, "control_delay_steps": 1},
//     "out": "out",
//     "workers": 1
//   }
//
// Every key is optional. PPO's discount follows the task reward's gamma
// unless "ppo" sets it explicitly.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aspace/ppo.hpp"

namespace aspace::bench {

namespace fs = std::filesystem;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvalConfig {
  int best = 3;                  // seeds evaluated per space, ranked by sim ER
  bool deployment_filters = true;
  int push_goals = 10;           // sequential goals per pushing evaluation
  int samples = 3;               // deterministic sample episodes saved after training
};

struct RunConfig {
  TaskConfig task;
  std::vector<ActionSpaceKind> spaces{ActionSpaceKind::JV};
  std::vector<std::uint64_t> seeds{0};
  std::string robot = "planar3";
  PPOConfig ppo;
  EvalConfig eval;
  Perturbation perturbation = Perturbation::standard();
  fs::path out = "out";
  int workers = 1;  // suite cells run concurrently

  void validate() const {
    task.validate();
    ppo.validate();
    perturbation.validate();
    if (spaces.empty()) throw UsageError("no action spaces selected");
    if (seeds.empty()) throw UsageError("seed list is empty");
    if (workers < 1) throw UsageError("workers must be >= 1");
    if (eval.best < 1 || eval.push_goals < 1 || eval.samples < 0) {
      throw UsageError("eval.best and eval.push_goals must be >= 1");
    }
  }
};

/// "all", a single name, or a comma-separated list. Unknown names raise a
/// UsageError listing the valid ones.
inline std::vector<ActionSpaceKind> parse_spaces(const std::string& s) {
  if (s == "all") return {kAllKinds.begin(), kAllKinds.end()};
  std::vector<ActionSpaceKind> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    const std::string name = s.substr(start, end - start);
    const auto k = parse_kind(name);
    if (!k) {
      throw UsageError("unknown action space '" + name + "'; valid: all, " + valid_kind_names());
    }
    out.push_back(*k);
    start = end + 1;
  }
  return out;
}

/// "3", "0..4" (inclusive) or "0,2,5".
inline std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  auto number = [&](const std::string& t) {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("invalid seed list '" + s + "'");
    }
    return std::stoull(t);
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = number(s.substr(0, dots)), hi = number(s.substr(dots + 2));
    if (lo > hi) throw UsageError("invalid seed range '" + s + "'");
    for (auto k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    out.push_back(number(s.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

/// Resolves a config-relative path: absolute and existing relative paths are
/// kept, anything else is looked up under the config directory.
inline fs::path resolve_config_path(const fs::path& p) {
  if (p.is_absolute() || fs::exists(p)) return p;
  return config_dir() / p;
}

/// Default task file for a task kind, or built-in defaults when absent.
inline TaskConfig default_task(TaskKind k) {
  const fs::path p = config_dir() / "tasks" / (std::string(task_name(k)) + ".json");
  TaskConfig base;
  base.task = k;
  return fs::exists(p) ? task_from_json(read_json_file(p), base) : base;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  TaskKind kind = TaskKind::Reach;
  if (j.contains("task")) {
    const auto k = parse_task(j["task"].get<std::string>());
    if (!k) throw UsageError("unknown task '" + j["task"].get<std::string>() + "'");
    kind = *k;
  }
  if (j.contains("task_config")) {
    const fs::path p = resolve_config_path(j["task_config"].get<std::string>());
    if (!fs::exists(p)) throw UsageError("task config not found: " + p.string());
    TaskConfig base;
    base.task = kind;
    c.task = task_from_json(read_json_file(p), base);
  } else {
    c.task = default_task(kind);
  }
  c.task.task = kind;
  if (j.contains("task_overrides")) c.task = task_from_json(j["task_overrides"], c.task);
  if (j.contains("reward")) c.task.reward = reward_from_json(j["reward"], c.task.reward);

  if (j.contains("spaces")) {
    const auto& s = j["spaces"];
    if (s.is_string()) {
      c.spaces = parse_spaces(s.get<std::string>());
    } else {
      c.spaces.clear();
      for (const auto& name : s) {
        const auto v = parse_spaces(name.get<std::string>());
        c.spaces.insert(c.spaces.end(), v.begin(), v.end());
      }
    }
  }
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    c.seeds = s.is_string() ? parse_seeds(s.get<std::string>())
                            : s.get<std::vector<std::uint64_t>>();
  }
  c.robot = j.value("robot", c.robot);
  c.ppo.gamma = c.task.reward.gamma;
  if (j.contains("ppo")) c.ppo = ppo_from_json(j["ppo"], c.ppo);
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    c.eval.best = e.value("best", c.eval.best);
    c.eval.deployment_filters = e.value("deployment_filters", c.eval.deployment_filters);
    c.eval.push_goals = e.value("push_goals", c.eval.push_goals);
    c.eval.samples = e.value("samples", c.eval.samples);
  }
  if (j.contains("perturbation")) c.perturbation = perturbation_from_json(j["perturbation"]);
  c.out = j.value("out", c.out.string());
  c.workers = j.value("workers", c.workers);
  c.validate();
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  const fs::path p = resolve_config_path(path);
  if (!fs::exists(p)) throw UsageError("run config not found: " + path.string());
  return run_config_from_json(read_json_file(p));
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json spaces = nlohmann::json::array();
  for (auto k : c.spaces) spaces.push_back(std::string(kind_name(k)));
  return {{"task", std::string(task_name(c.task.task))},
          {"task_overrides", to_json(c.task)},
          {"spaces", spaces},
          {"seeds", c.seeds},
          {"robot", c.robot},
          {"ppo", to_json(c.ppo)},
          {"eval",
           {{"best", c.eval.best},
            {"deployment_filters", c.eval.deployment_filters},
            {"push_goals", c.eval.push_goals},
            {"samples", c.eval.samples}}},
          {"perturbation", to_json(c.perturbation)},
          {"out", c.out.string()},
          {"workers", c.workers}};
}

/// Output root: ASPACE_OUT when set, otherwise the configured directory.
inline fs::path output_root(const RunConfig& c) {
  if (const char* env = std::getenv("ASPACE_OUT"); env && *env) return env;
  return c.out;
}

}  // namespace aspace::bench
