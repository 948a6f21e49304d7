#pragma once

// Run-directory report: the aggregated metric table plus learning-curve
// plots with a median line and a 5th-95th percentile band across seeds.
//
// Writes <root>/report.json, <root>/report.txt and <root>/plots/*.svg.

#include <fstream>
#include <map>

#include "aspace/bench/evaluate.hpp"
#include "aspace/bench/svg.hpp"

namespace aspace::bench {

using Curve = std::vector<std::pair<double, double>>;  // (env_steps, ER), x increasing

/// Linear interpolation, clamped at the ends.
inline double interpolate(const Curve& c, double x) {
  if (c.empty()) throw std::invalid_argument("interpolate: empty curve");
  if (x <= c.front().first) return c.front().second;
  if (x >= c.back().first) return c.back().second;
  const auto it = std::lower_bound(c.begin(), c.end(), x,
                                   [](const auto& p, double v) { return p.first < v; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (b.first == a.first) return b.second;
  return a.second + (b.second - a.second) * (x - a.first) / (b.first - a.first);
}

/// Median and 5th/95th percentiles across curves, evaluated on the x values
/// of the first curve that every curve covers.
inline BandSeries percentile_band(const std::vector<Curve>& curves, std::string label,
                                  std::string color) {
  BandSeries s;
  s.label = std::move(label);
  s.color = std::move(color);
  std::vector<const Curve*> live;
  for (const auto& c : curves) {
    if (!c.empty()) live.push_back(&c);
  }
  if (live.empty()) return s;
  double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Curve* c : live) {
    lo = std::max(lo, c->front().first);
    hi = std::min(hi, c->back().first);
  }
  for (const auto& [x, y] : *live.front()) {
    if (x < lo || x > hi) continue;
    std::vector<double> ys;
    for (const Curve* c : live) ys.push_back(interpolate(*c, x));
    s.x.push_back(x);
    s.mid.push_back(percentile(ys, 50));
    s.lo.push_back(percentile(ys, 5));
    s.hi.push_back(percentile(ys, 95));
  }
  return s;
}

struct SpaceGroup {
  std::string label;
  std::vector<ActionSpaceKind> members;
};

/// Joint vs Cartesian and position vs velocity families.
inline std::vector<std::pair<std::string, std::vector<SpaceGroup>>> space_groups() {
  std::vector<ActionSpaceKind> joint, cart, pos, vel;
  for (auto k : kAllKinds) {
    const BaseSpace b = base_of(k);
    (b == BaseSpace::CP || b == BaseSpace::CV ? cart : joint).push_back(k);
    if (b == BaseSpace::JP || b == BaseSpace::CP) pos.push_back(k);
    if (b == BaseSpace::JV || b == BaseSpace::CV) vel.push_back(k);
  }
  return {{"joint_vs_cartesian", {{"J", joint}, {"C", cart}}},
          {"position_vs_velocity", {{"P", pos}, {"V", vel}}}};
}

inline std::vector<Curve> load_curves(const fs::path& space_root) {
  std::vector<Curve> out;
  if (!fs::exists(space_root)) return out;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(space_root)) {
    if (e.is_directory() && fs::exists(e.path() / "DONE") && fs::exists(e.path() / "curve.csv")) {
      dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) out.push_back(read_curve_csv(d / "curve.csv"));
  return out;
}

struct ReportSummary {
  MetricReport table;
  std::vector<fs::path> plots;
  std::string text;
};

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf"};
  return colors[i % 7];
}

/// Builds the table and plots from whatever cells exist under `root`.
inline ReportSummary build_report(const fs::path& root) {
  ReportSummary out;
  const fs::path plots = root / "plots";
  std::vector<std::string> labels;
  for (auto k : kAllKinds) labels.emplace_back(kind_label(k));
  std::vector<std::string> tasks;
  for (auto t : {TaskKind::Reach, TaskKind::Push}) {
    const std::string tn(task_name(t));
    tasks.push_back(tn);
    std::map<ActionSpaceKind, std::vector<Curve>> curves;
    for (auto k : kAllKinds) {
      const fs::path sd = space_dir(root, t, k);
      const fs::path rep = sd / "eval" / "report.json";
      if (fs::exists(rep)) {
        const MetricReport r = report_from_json(read_json_file(rep));
        out.table.rows.insert(out.table.rows.end(), r.rows.begin(), r.rows.end());
      }
      auto c = load_curves(sd);
      if (c.empty()) continue;
      fs::create_directories(plots);
      const fs::path p = plots / (tn + "_" + std::string(kind_name(k)) + ".svg");
      std::ofstream(p) << render_band_svg(
          tn + " / " + std::string(kind_label(k)) + " (" + std::to_string(c.size()) + " seeds)",
          "environment steps", "episode return",
          {percentile_band(c, std::string(kind_label(k)), palette(0))});
      out.plots.push_back(p);
      curves[k] = std::move(c);
    }
    if (curves.empty()) continue;
    for (const auto& [name, groups] : space_groups()) {
      std::vector<BandSeries> series;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<Curve> pooled;
        for (auto k : groups[g].members) {
          if (auto it = curves.find(k); it != curves.end()) {
            pooled.insert(pooled.end(), it->second.begin(), it->second.end());
          }
        }
        if (!pooled.empty()) series.push_back(percentile_band(pooled, groups[g].label, palette(g)));
      }
      if (series.empty()) continue;
      const fs::path p = plots / (tn + "_" + name + ".svg");
      std::ofstream(p) << render_band_svg(tn + " / " + name, "environment steps",
                                          "episode return", series);
      out.plots.push_back(p);
    }
  }
  // rows only for spaces and tasks with data; a missing pair shows as "-"
  auto has = [&](auto pred) {
    return std::any_of(out.table.rows.begin(), out.table.rows.end(), pred);
  };
  std::vector<std::string> row_spaces, row_tasks;
  for (const auto& l : labels) {
    if (has([&](const MetricRow& r) { return r.space == l; })) row_spaces.push_back(l);
  }
  for (const auto& t : tasks) {
    if (has([&](const MetricRow& r) { return r.task == t; })) row_tasks.push_back(t);
  }
  out.text = render_table(out.table, row_spaces, row_tasks);
  fs::create_directories(root);
  std::ofstream(root / "report.json") << to_json(out.table).dump(2) << '\n';
  std::ofstream(root / "report.txt") << out.text;
  return out;
}

}  // namespace aspace::bench
