#pragma once

// Evaluation metrics over trajectory logs.
//
//   ECV  fraction of controller steps on which any joint velocity,
//        acceleration, or jerk bound is exceeded (evaluated at 120 Hz)
//   NTE  |v_d,t - v_t+1| / (v_max - v_min) at policy-step boundaries,
//        averaged over dimensions, then steps
//   OTE  mean |q_replay - q_log| over joints and steps after open-loop replay
//   ER   undiscounted episode reward; SR success rate; ACC final distance

#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aspace/trajectory.hpp"

namespace aspace {

/// Linear-interpolation percentile (p in [0, 100]) of an unsorted sample.
inline double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------
// ECV
// ---------------------------------------------------------------------------

struct Ratio {
  long hits = 0;
  long total = 0;
  double value() const { return total ? static_cast<double>(hits) / total : 0.0; }
};

/// Violating steps recomputed from each log's joint stream. Every step of
/// every trajectory counts once.
inline Ratio ecv_counts(const std::vector<Trajectory>& trs, const ConstraintSet& cs) {
  Ratio r;
  for (const auto& tr : trs) {
    const auto flags = check_stream(tr.joint_stream(), cs);
    for (std::size_t k = 1; k < flags.size(); ++k) {
      r.hits += flags[k].any();
      ++r.total;
    }
  }
  return r;
}

inline double ecv(const std::vector<Trajectory>& trs, const ConstraintSet& cs) {
  const Ratio r = ecv_counts(trs, cs);
  if (r.total == 0) throw std::invalid_argument("ecv: no steps");
  return r.value();
}

/// Same fraction from the flags stored in the log.
inline double ecv_recorded(const std::vector<Trajectory>& trs) {
  Ratio r;
  for (const auto& tr : trs) {
    for (const auto& s : tr.steps) {
      r.hits += s.flags.any();
      ++r.total;
    }
  }
  if (r.total == 0) throw std::invalid_argument("ecv: no steps");
  return r.value();
}

// ---------------------------------------------------------------------------
// NTE
// ---------------------------------------------------------------------------

/// Per-policy-step normalized errors |v_d,t - v_t+1| / range, averaged over
/// dimensions. v_t+1 is the feedback measured at the start of the next
/// policy step.
inline std::vector<double> nte_terms(const Trajectory& tr) {
  const Vec& lo = tr.header.v_lo;
  const Vec& hi = tr.header.v_hi;
  if (lo.size() != hi.size() || lo.size() == 0) throw std::invalid_argument("nte: missing limits");
  const Vec range = hi - lo;
  if ((range.array() <= 0).any()) throw std::invalid_argument("nte: degenerate limits");
  std::vector<const StepRecord*> starts;
  for (const auto& s : tr.steps) {
    if (s.substep == 0) starts.push_back(&s);
  }
  if (starts.size() < 2) throw std::invalid_argument("nte: needs at least 2 policy steps");
  std::vector<double> out;
  out.reserve(starts.size() - 1);
  for (std::size_t t = 0; t + 1 < starts.size(); ++t) {
    const Vec& vd = starts[t]->v_d;
    const Vec& v_next = starts[t + 1]->v;
    require_size(vd, range.size(), "nte v_d");
    require_size(v_next, range.size(), "nte v");
    out.push_back(((vd - v_next).cwiseAbs().array() / range.array()).mean());
  }
  return out;
}

inline double nte(const Trajectory& tr) { return mean(nte_terms(tr)); }

// ---------------------------------------------------------------------------
// OTE
// ---------------------------------------------------------------------------

struct OteResult {
  std::vector<double> per_step;  // mean |dq_joint| at each controller step
  double mean = 0.0;
};

/// Replays the logged actions open loop in a world with perturbation
/// `replay_world`, starting from the logged initial state, and compares the
/// joint trajectories. `expected_kind`, when given, must match the log.
inline OteResult ote_replay(const Trajectory& log, const Perturbation& replay_world,
                            std::optional<ActionSpaceKind> expected_kind = std::nullopt) {
  const auto kind = parse_kind(log.header.kind);
  if (!kind) throw std::invalid_argument("log has unknown action space '" + log.header.kind + "'");
  if (expected_kind && *expected_kind != *kind) {
    throw std::invalid_argument("action space mismatch: log is " + log.header.kind +
                                ", replay expects " + std::string(kind_name(*expected_kind)));
  }
  if (log.steps.empty()) throw std::invalid_argument("ote: empty log");
  const RobotModel model = robot_from_json(log.header.robot);
  const ActionSpaceConfig cfg = action_config_from_json(log.header.action_config, model);
  WorldConfig wc;
  wc.dt = log.header.dt;
  wc.contact = log.header.contact;
  Rollout replay(model, cfg, replay_world, wc);
  WorldState s0;
  s0.joints = log.header.initial;
  s0.box = log.header.box0;
  replay.reset(s0, log.header.box);

  OteResult out;
  out.per_step.reserve(log.steps.size());
  double sum = 0.0;
  for (const auto& rec : log.steps) {
    const ControlStep cs = replay.step(rec.a);
    const double e = (cs.after.joints.q - rec.q).cwiseAbs().mean();
    out.per_step.push_back(e);
    sum += e;
  }
  out.mean = sum / static_cast<double>(out.per_step.size());
  return out;
}

/// Mean OTE over several logs (each weighted by its step count).
inline double ote(const std::vector<Trajectory>& logs, const Perturbation& replay_world) {
  double sum = 0.0;
  long n = 0;
  for (const auto& tr : logs) {
    const OteResult r = ote_replay(tr, replay_world);
    for (double e : r.per_step) sum += e;
    n += static_cast<long>(r.per_step.size());
  }
  if (n == 0) throw std::invalid_argument("ote: no steps");
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Foldable per-(space, task) accumulator. Merging two accumulators and
/// finishing equals finishing over the union of their episodes.
struct MetricAccumulator {
  std::vector<double> returns;    // ER per episode
  std::vector<double> distances;  // final distance per episode, m
  long successes = 0;
  Ratio ecv;
  double nte_sum = 0.0;
  long nte_count = 0;
  double ote_sum = 0.0;
  long ote_count = 0;

  long episodes() const { return static_cast<long>(returns.size()); }

  void merge(const MetricAccumulator& o) {
    returns.insert(returns.end(), o.returns.begin(), o.returns.end());
    distances.insert(distances.end(), o.distances.begin(), o.distances.end());
    successes += o.successes;
    ecv.hits += o.ecv.hits;
    ecv.total += o.ecv.total;
    nte_sum += o.nte_sum;
    nte_count += o.nte_count;
    ote_sum += o.ote_sum;
    ote_count += o.ote_count;
  }
};

/// One row of the report. Percent quantities are 0..100, ACC is in cm.
struct MetricRow {
  std::string space;  // label, e.g. "MIΔJP"
  std::string task;
  long episodes = 0;
  double er_mean = 0, er_p5 = 0, er_p95 = 0;
  double sr = 0;  // %
  double acc_cm = 0, acc_p5_cm = 0, acc_p95_cm = 0;
  std::optional<double> ecv;  // %
  std::optional<double> nte;
  std::optional<double> ote;  // rad
};

struct SummaryConfig {
  double eps = 0.02;
  std::optional<ConstraintSet> constraints;  // recompute ECV when set
  bool with_nte = true;
};

/// Adds one episode. `ote_steps`/`ote_sum` come from a replay when available.
inline void accumulate(MetricAccumulator& acc, const Trajectory& tr, const SummaryConfig& cfg,
                       const std::optional<OteResult>& ote = std::nullopt) {
  if (tr.steps.empty()) throw std::invalid_argument("summarize: empty episode");
  acc.returns.push_back(tr.episode_return());
  const double d = tr.final_distance();
  acc.distances.push_back(d);
  acc.successes += d < cfg.eps;
  if (cfg.constraints) {
    const Ratio r = ecv_counts({tr}, *cfg.constraints);
    acc.ecv.hits += r.hits;
    acc.ecv.total += r.total;
  } else {
    for (const auto& s : tr.steps) {
      acc.ecv.hits += s.flags.any();
      ++acc.ecv.total;
    }
  }
  if (cfg.with_nte) {
    const auto terms = nte_terms(tr);
    for (double x : terms) acc.nte_sum += x;
    acc.nte_count += static_cast<long>(terms.size());
  }
  if (ote) {
    for (double e : ote->per_step) acc.ote_sum += e;
    acc.ote_count += static_cast<long>(ote->per_step.size());
  }
}

inline MetricRow finish(const MetricAccumulator& acc, std::string space, std::string task) {
  if (acc.episodes() == 0) throw std::invalid_argument("summarize: no completed episodes");
  MetricRow r;
  r.space = std::move(space);
  r.task = std::move(task);
  r.episodes = acc.episodes();
  r.er_mean = mean(acc.returns);
  r.er_p5 = percentile(acc.returns, 5);
  r.er_p95 = percentile(acc.returns, 95);
  r.sr = 100.0 * static_cast<double>(acc.successes) / static_cast<double>(r.episodes);
  r.acc_cm = 100.0 * mean(acc.distances);
  r.acc_p5_cm = 100.0 * percentile(acc.distances, 5);
  r.acc_p95_cm = 100.0 * percentile(acc.distances, 95);
  if (acc.ecv.total > 0) r.ecv = 100.0 * acc.ecv.value();
  if (acc.nte_count > 0) r.nte = acc.nte_sum / static_cast<double>(acc.nte_count);
  if (acc.ote_count > 0) r.ote = acc.ote_sum / static_cast<double>(acc.ote_count);
  return r;
}

/// Episodes of one (space, task) cell to a report row.
inline MetricRow summarize(const std::vector<Trajectory>& trs, const SummaryConfig& cfg,
                           const std::vector<OteResult>& otes = {}) {
  if (trs.empty()) throw std::invalid_argument("summarize: no completed episodes");
  if (!otes.empty() && otes.size() != trs.size()) {
    throw std::invalid_argument("summarize: one OTE result per episode required");
  }
  MetricAccumulator acc;
  for (std::size_t i = 0; i < trs.size(); ++i) {
    accumulate(acc, trs[i], cfg, otes.empty() ? std::nullopt : std::optional(otes[i]));
  }
  const auto kind = parse_kind(trs.front().header.kind);
  return finish(acc, kind ? std::string(kind_label(*kind)) : trs.front().header.kind,
                trs.front().header.task);
}

struct MetricReport {
  std::vector<MetricRow> rows;
  std::string notes =
      "ECV per controller step at 120 Hz; NTE averaged over dimensions then policy steps; "
      "OTE mean absolute joint error over joints and steps";
};

inline nlohmann::json to_json(const MetricRow& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"space", r.space},          {"task", r.task},
          {"episodes", r.episodes},    {"er", r.er_mean},
          {"er_p5", r.er_p5},          {"er_p95", r.er_p95},
          {"sr", r.sr},                {"acc_cm", r.acc_cm},
          {"acc_p5_cm", r.acc_p5_cm},  {"acc_p95_cm", r.acc_p95_cm},
          {"ecv", opt(r.ecv)},         {"nte", opt(r.nte)},
          {"ote", opt(r.ote)}};
}

inline MetricRow row_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  MetricRow r;
  r.space = j.at("space");
  r.task = j.at("task");
  r.episodes = j.at("episodes");
  r.er_mean = j.at("er");
  r.er_p5 = j.value("er_p5", r.er_mean);
  r.er_p95 = j.value("er_p95", r.er_mean);
  r.sr = j.at("sr");
  r.acc_cm = j.at("acc_cm");
  r.acc_p5_cm = j.value("acc_p5_cm", r.acc_cm);
  r.acc_p95_cm = j.value("acc_p95_cm", r.acc_cm);
  r.ecv = opt("ecv");
  r.nte = opt("nte");
  r.ote = opt("ote");
  return r;
}

inline nlohmann::json to_json(const MetricReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) rows.push_back(to_json(r));
  return {{"columns", {"SR", "ACC", "ECV", "NTE", "OTE", "ER"}},
          {"notes", rep.notes},
          {"rows", rows}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport rep;
  rep.notes = j.value("notes", rep.notes);
  for (const auto& r : j.at("rows")) rep.rows.push_back(row_from_json(r));
  return rep;
}

namespace detail {

// Display width of a UTF-8 string (code points).
inline std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

inline std::string pad(const std::string& s, std::size_t w, bool left = false) {
  const std::size_t d = display_width(s);
  const std::string fill(w > d ? w - d : 0, ' ');
  return left ? s + fill : fill + s;
}

inline std::string fmt(double v, int prec) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << v;
  return o.str();
}

}  // namespace detail

/// Aligned text table. `spaces` fixes the row order and inserts "-" rows for
/// cells without data; `tasks` likewise.
inline std::string render_table(const MetricReport& rep,
                                const std::vector<std::string>& spaces = {},
                                const std::vector<std::string>& tasks = {}) {
  using detail::fmt;
  std::vector<std::string> sp = spaces, tk = tasks;
  for (const auto& r : rep.rows) {
    if (std::find(sp.begin(), sp.end(), r.space) == sp.end()) sp.push_back(r.space);
    if (std::find(tk.begin(), tk.end(), r.task) == tk.end()) tk.push_back(r.task);
  }
  const std::vector<std::string> head = {"Space", "Task", "SR %",   "ACC cm", "ECV %",
                                         "NTE",   "OTE",  "ER",     "N"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& t : tk) {
    for (const auto& s : sp) {
      auto it = std::find_if(rep.rows.begin(), rep.rows.end(),
                             [&](const MetricRow& r) { return r.space == s && r.task == t; });
      if (it == rep.rows.end()) {
        cells.push_back({s, t, "-", "-", "-", "-", "-", "-", "-"});
        continue;
      }
      const MetricRow& r = *it;
      auto opt = [&](const std::optional<double>& v, int p) { return v ? fmt(*v, p) : "-"; };
      cells.push_back({r.space, r.task, fmt(r.sr, 0), fmt(r.acc_cm, 2), opt(r.ecv, 1),
                       opt(r.nte, 3), opt(r.ote, 3), fmt(r.er_mean, 1),
                       std::to_string(r.episodes)});
    }
  }
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    w[c] = detail::display_width(head[c]);
    for (const auto& row : cells) w[c] = std::max(w[c], detail::display_width(row[c]));
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << detail::pad(row[c], w[c], c < 2);
    }
    out << '\n';
  };
  line(head);
  std::size_t total = 0;
  for (auto x : w) total += x;
  out << std::string(total + 2 * (w.size() - 1), '-') << '\n';
  for (const auto& row : cells) line(row);
  return out.str();
}

}  // namespace aspace
