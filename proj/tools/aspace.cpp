// Command-line front end.
//
//   aspace train      --task reach --space jv --seeds 0..2 [--dry-run]
//   aspace eval       --task reach --space all [--best 3] [--stub zero]
//   aspace replay-ote --log run.jsonl [--profile p.json | --identity] [--csv out.csv]
//   aspace report     [--dir out]
//   aspace benchmark  --config runs/benchmark_reach.json
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error. ASPACE_OUT overrides
// the output root unless --out is given.

#include <iostream>
#include <mutex>

#include <CLI11.hpp>

#include "aspace/aspace.hpp"

namespace {

using namespace aspace;
using namespace aspace::bench;

struct Common {
  std::string config, task, space, seeds, robot, out;
  long steps = 0;
  int workers = 0;
  int ppo_workers = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "run config (JSON), relative to config/ or cwd");
  cmd->add_option("--task", c.task, "reach or push");
  cmd->add_option("--space", c.space, "action space name, comma list, or all");
  cmd->add_option("--seeds,--seed", c.seeds, "seed, inclusive range a..b, or comma list");
  cmd->add_option("--robot", c.robot, "robot name under config/robots or a path");
  cmd->add_option("--steps", c.steps, "PPO environment steps per run");
  cmd->add_option("--workers", c.workers, "suite cells run concurrently");
  cmd->add_option("--ppo-workers", c.ppo_workers, "rollout threads per run");
  cmd->add_option("--out", c.out, "output root (overrides ASPACE_OUT)");
}

RunConfig resolve(const Common& c) {
  nlohmann::json j = nlohmann::json::object();
  if (!c.config.empty()) {
    const fs::path p = resolve_config_path(c.config);
    if (!fs::exists(p)) throw UsageError("run config not found: " + c.config);
    j = read_json_file(p);
  }
  if (!c.task.empty()) j["task"] = c.task;
  if (!c.space.empty()) j["spaces"] = c.space;
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  if (!c.robot.empty()) j["robot"] = c.robot;
  if (c.steps > 0) j["ppo"]["total_steps"] = c.steps;
  if (c.ppo_workers > 0) j["ppo"]["workers"] = c.ppo_workers;
  if (c.workers > 0) j["workers"] = c.workers;
  try {
    RunConfig cfg = run_config_from_json(j);
    cfg.out = c.out.empty() ? output_root(cfg) : fs::path(c.out);
    return cfg;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
}

std::mutex io_mutex;

void say(const std::string& s) {
  std::lock_guard<std::mutex> lock(io_mutex);
  std::cout << s << std::endl;
}

std::string fixed(double v, int prec) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << v;
  return o.str();
}

int cmd_train(const Common& c, bool dry_run) {
  const RunConfig cfg = resolve(c);
  const auto cells = plan_cells(cfg);
  int done = 0;
  for (const auto& cell : cells) done += cell_done(cfg.out, cell);
  say("scheduled " + std::to_string(cells.size()) + " runs (" + std::to_string(done) +
      " already complete) under " + cfg.out.string());
  if (dry_run) {
    for (const auto& cell : cells) {
      say("  " + cell.name() + (cell_done(cfg.out, cell) ? "  [done]" : ""));
    }
    return 0;
  }
  const RobotModel model = load_robot(cfg.robot);
  const auto st = run_suite(cells, cfg.out, cfg.workers, [&](const Cell& cell) {
    const auto res = train_cell(cfg, model, cell, cfg.out, [&](const CurvePoint& p) {
      if (p.iteration % 25 == 0) {
        say(cell.name() + "  steps " + std::to_string(p.env_steps) + "  ER " +
            fixed(p.mean_er, 1) + "  success " + fixed(p.success, 2));
      }
    });
    const auto& last = res.curve.back();
    say(cell.name() + " done: steps " + std::to_string(last.env_steps) + ", best ER " +
        fixed(res.best_er, 1) + ", last success " + fixed(last.success, 2));
  });
  say("trained " + std::to_string(st.ran) + ", skipped " + std::to_string(st.skipped));
  return 0;
}

int cmd_eval(const Common& c, int best, const std::string& stub) {
  RunConfig cfg = resolve(c);
  if (best > 0) cfg.eval.best = best;
  if (!stub.empty() && stub != "zero") throw UsageError("unknown stub policy '" + stub + "'");
  const RobotModel model = load_robot(cfg.robot);
  MetricReport rep;
  for (auto k : cfg.spaces) {
    const auto ev = evaluate_space(cfg, model, k, cfg.out, !stub.empty());
    rep.rows.push_back(ev.row);
    std::string seeds;
    for (const auto& s : ev.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s.seed);
    say(std::string(kind_name(k)) + ": " + std::to_string(ev.episodes.size()) + " episodes" +
        (seeds.empty() ? " (stub policy)" : ", seeds " + seeds));
  }
  std::cout << render_table(rep);
  return 0;
}

int cmd_replay(const std::string& log, const std::string& profile, bool identity,
               std::optional<double> mass, std::optional<double> friction,
               std::optional<int> delay, std::string csv) {
  if (!fs::exists(log)) throw std::runtime_error("log not found: " + log);
  Perturbation p = Perturbation::standard();
  if (identity) p = Perturbation{};
  if (!profile.empty()) {
    const fs::path pp = resolve_config_path(profile);
    if (!fs::exists(pp)) throw UsageError("profile not found: " + profile);
    p = perturbation_from_json(read_json_file(pp));
  }
  if (mass) p.mass_scale = *mass;
  if (friction) p.friction_scale = *friction;
  if (delay) p.control_delay_steps = *delay;
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto trs = read_trajectories(fs::path(log));
  if (trs.empty()) throw std::runtime_error(log + ": no episodes");
  if (csv.empty()) csv = log + ".ote.csv";
  std::ofstream out(csv);
  if (!out) throw std::runtime_error("cannot write " + csv);
  out.precision(12);
  out << "episode,step,t,ote\n";
  double sum = 0.0;
  long n = 0;
  for (std::size_t e = 0; e < trs.size(); ++e) {
    const OteResult r = ote_replay(trs[e], p);
    for (std::size_t i = 0; i < r.per_step.size(); ++i) {
      out << e << ',' << trs[e].steps[i].k << ',' << trs[e].steps[i].t << ',' << r.per_step[i]
          << '\n';
      sum += r.per_step[i];
      ++n;
    }
    say("episode " + std::to_string(e) + " (" + trs[e].header.kind + "): OTE " +
        fixed(r.mean, 6) + " rad over " + std::to_string(r.per_step.size()) + " steps");
  }
  std::ostringstream o;
  o.precision(12);
  o << sum / static_cast<double>(n);
  say("profile mass_scale=" + fixed(p.mass_scale, 3) + " friction_scale=" +
      fixed(p.friction_scale, 3) + " delay=" + std::to_string(p.control_delay_steps));
  say("OTE " + o.str() + " rad (" + std::to_string(trs.size()) + " episodes, " +
      std::to_string(n) + " steps); per-step errors in " + csv);
  return 0;
}

int cmd_report(const std::string& dir_opt) {
  fs::path dir = dir_opt;
  if (dir.empty()) {
    const char* env = std::getenv("ASPACE_OUT");
    dir = env && *env ? env : "out";
  }
  if (!fs::exists(dir)) throw std::runtime_error("run directory not found: " + dir.string());
  const auto rep = build_report(dir);
  std::cout << rep.text;
  say(std::to_string(rep.plots.size()) + " plots in " + (dir / "plots").string());
  return 0;
}

int cmd_benchmark(const Common& c) {
  const RunConfig cfg = resolve(c);
  cmd_train(c, false);
  const RobotModel model = load_robot(cfg.robot);
  for (auto k : cfg.spaces) {
    if (fs::exists(space_dir(cfg.out, cfg.task.task, k) / "eval" / "report.json")) continue;
    const auto ev = evaluate_space(cfg, model, k, cfg.out);
    say(std::string(kind_name(k)) + " evaluated: SR " + fixed(ev.row.sr, 1) + " %");
  }
  return cmd_report(cfg.out.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-space benchmark: training, evaluation, offline replay, reports"};
  app.require_subcommand(1);

  Common train_opts, eval_opts, bench_opts;
  bool dry_run = false;
  auto* train = app.add_subcommand("train", "train one policy per (space, seed)");
  add_common(train, train_opts);
  train->add_flag("--dry-run", dry_run, "list the scheduled runs and exit");

  int best = 0;
  std::string stub;
  auto* eval = app.add_subcommand("eval", "evaluate the best seeds of each space");
  add_common(eval, eval_opts);
  eval->add_option("--best", best, "seeds per space, ranked by sim ER");
  eval->add_option("--stub", stub, "evaluate a stub policy instead of checkpoints (zero)");

  std::string log, profile, csv;
  bool identity = false;
  std::optional<double> mass, friction;
  std::optional<int> delay;
  auto* replay = app.add_subcommand("replay-ote", "replay a trajectory log in a perturbed world");
  replay->add_option("--log", log, "trajectory log (JSON lines)")->required();
  replay->add_option("--profile", profile, "perturbation profile (JSON)");
  replay->add_flag("--identity", identity, "replay in the nominal world");
  replay->add_option("--mass-scale", mass, "link mass multiplier");
  replay->add_option("--friction-scale", friction, "friction multiplier");
  replay->add_option("--delay", delay, "control delay, controller steps");
  replay->add_option("--csv", csv, "per-step error CSV (default <log>.ote.csv)");

  std::string dir;
  auto* report = app.add_subcommand("report", "aggregate a run directory into tables and plots");
  report->add_option("--dir", dir, "run directory (default ASPACE_OUT or out)");

  auto* bench = app.add_subcommand("benchmark", "train, evaluate and report a whole suite");
  add_common(bench, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(train_opts, dry_run);
    if (*eval) return cmd_eval(eval_opts, best, stub);
    if (*replay) return cmd_replay(log, profile, identity, mass, friction, delay, csv);
    if (*report) return cmd_report(dir);
    if (*bench) return cmd_benchmark(bench_opts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
