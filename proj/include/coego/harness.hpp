#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "coego/sim.hpp"

namespace coego {

struct SweepSpec {
  std::vector<Condition> conditions{Condition::Unassisted, Condition::SingleView, Condition::CrossView};
  std::uint64_t seed_first = 0;
  std::uint64_t seed_last = 19;  // inclusive
  std::filesystem::path out_dir;  // empty: no files written
  int jobs = 1;

  std::size_t episode_count() const { return conditions.size() * static_cast<std::size_t>(seed_last - seed_first + 1); }
};

inline void validate(const SweepSpec& s) {
  if (s.conditions.empty()) throw ValidationError("sweep.conditions", "at least one condition is required");
  if (s.seed_last < s.seed_first) throw ValidationError("sweep.seeds", "range is empty");
  if (s.jobs < 1) throw ValidationError("sweep.jobs", "must be >= 1");
}

/// "A..B" (inclusive) or a single seed "A".
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_seed_range(std::string_view text) {
  auto parse = [](std::string_view s) -> std::optional<std::uint64_t> {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const auto v = parse(text);
    if (!v) return std::nullopt;
    return std::pair{*v, *v};
  }
  const auto a = parse(text.substr(0, dots));
  const auto b = parse(text.substr(dots + 2));
  if (!a || !b || *b < *a) return std::nullopt;
  return std::pair{*a, *b};
}

inline std::filesystem::path trace_relpath(Condition c, std::uint64_t seed) {
  return std::filesystem::path(std::string(to_string(c))) / fmt::format("seed_{:03d}.csv", seed);
}

/// Runs every (condition, seed) pair, `jobs` episodes at a time. Results come back
/// in condition-major, seed-minor order regardless of scheduling.
inline std::vector<EpisodeReport> run_sweep(const ScenarioConfig& cfg, const SweepSpec& spec,
                                            Describer* describer = nullptr) {
  validate(spec);
  validate(cfg);
  struct Job {
    Condition condition;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto c : spec.conditions)
    for (auto s = spec.seed_first; s <= spec.seed_last; ++s) jobs.push_back({c, s});

  std::vector<EpisodeReport> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      EpisodeOptions opts;
      opts.describer = describer;
      if (!spec.out_dir.empty()) opts.trace_path = spec.out_dir / trace_relpath(jobs[i].condition, jobs[i].seed);
      out[i] = run_episode(cfg, jobs[i].condition, jobs[i].seed, opts);
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for fewer than two values
  std::size_t n = 0;
};

inline Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct ConditionSummary {
  Condition condition = Condition::CrossView;
  std::size_t episodes = 0;
  std::size_t completed = 0;
  Stat collisions;
  Stat ground;
  Stat overhead;
  Stat time;  // over completed episodes only
  Stat robot_collisions;
};

/// One row per condition present, in Unassisted, SingleView, CrossView order.
inline std::vector<ConditionSummary> summarize(const std::vector<EpisodeReport>& reports) {
  std::vector<ConditionSummary> out;
  for (const auto c : {Condition::Unassisted, Condition::SingleView, Condition::CrossView}) {
    std::vector<double> tot, gr, ov, time, rob;
    std::size_t n = 0;
    for (const auto& r : reports) {
      if (r.condition != c) continue;
      ++n;
      tot.push_back(r.collisions_total);
      gr.push_back(r.collisions_ground);
      ov.push_back(r.collisions_overhead);
      rob.push_back(r.robot_collisions);
      if (r.completed()) time.push_back(r.completion_time);
    }
    if (n == 0) continue;
    out.push_back({c, n, time.size(), stat_of(tot), stat_of(gr), stat_of(ov), stat_of(time), stat_of(rob)});
  }
  return out;
}

inline std::string format_report(const EpisodeReport& r) {
  const std::string time =
      r.completed() ? fmt::format("{:.2f}", r.completion_time) : fmt::format("DNF({})", to_string(r.outcome));
  return fmt::format(
      "condition={} seed={} outcome={} completion_time_s={} collisions_total={} collisions_ground={} "
      "collisions_overhead={} robot_collisions={} announcements={} trace={}",
      to_string(r.condition), r.seed, to_string(r.outcome), time, r.collisions_total, r.collisions_ground,
      r.collisions_overhead, r.robot_collisions, r.announcements, r.trace_path.empty() ? "-" : r.trace_path);
}

inline std::string format_summary(const std::vector<ConditionSummary>& rows) {
  auto pm = [](const Stat& s) { return fmt::format("{:.2f} ± {:.2f}", s.mean, s.std); };
  std::string out = fmt::format("{:<11} {:>3} {:>4}  {:<14} {:<14} {:<14} {:<14}\n", "condition", "n", "done",
                                "collisions", "ground", "overhead", "time_s");
  for (const auto& r : rows) {
    out += fmt::format("{:<11} {:>3} {:>4}  {:<14} {:<14} {:<14} {:<14}\n", to_string(r.condition), r.episodes,
                       r.completed, pm(r.collisions), pm(r.ground), pm(r.overhead),
                       r.time.n ? pm(r.time) : std::string("-"));
  }
  return out;
}

/// Writes reports.txt and summary.txt into the sweep's output directory.
inline void write_sweep_outputs(const SweepSpec& spec, const std::vector<EpisodeReport>& reports) {
  if (spec.out_dir.empty()) return;
  std::filesystem::create_directories(spec.out_dir);
  std::ofstream rep(spec.out_dir / "reports.txt", std::ios::binary);
  for (const auto& r : reports) rep << format_report(r) << '\n';
  std::ofstream sum(spec.out_dir / "summary.txt", std::ios::binary);
  sum << format_summary(summarize(reports));
}

// ---------------------------------------------------------------------------
// Traces

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<CommandSource> parse_source(std::string_view s) {
  for (const auto c : {CommandSource::Apf, CommandSource::Human, CommandSource::Stop, CommandSource::Walker})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

inline std::vector<TraceRow> parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line + "\n" != trace_header()) throw TraceFormatError("trace: unexpected header");
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw TraceFormatError(fmt::format("trace line {}: bad number '{}'", lineno, s));
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 13) throw TraceFormatError(fmt::format("trace line {}: expected 13 columns", lineno));
    TraceRow r;
    r.t = num(f[0]);
    r.robot = {num(f[1]), num(f[2]), num(f[3])};
    r.human = {num(f[4]), num(f[5]), 0.0};
    const auto src = parse_source(f[6]);
    if (!src) throw TraceFormatError(fmt::format("trace line {}: unknown source '{}'", lineno, f[6]));
    r.source = *src;
    r.a = static_cast<int>(num(f[7]));
    r.cmd = {num(f[8]), num(f[9]), num(f[10]), r.t, *src, false};
    if (!f[11].empty()) r.min_roi_depth = num(f[11]);
    r.event = f[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError("trace: cannot open " + path.string());
  return parse_trace(in);
}

inline std::vector<std::string> split_events(const std::string& events) {
  std::vector<std::string> out;
  std::string e;
  std::istringstream in(events);
  while (std::getline(in, e, ';'))
    if (!e.empty()) out.push_back(e);
  return out;
}

/// Rebuilds the report from a trace alone. Announcements count sentinel fires.
inline EpisodeReport report_from_trace(const std::vector<TraceRow>& rows, Condition condition, std::uint64_t seed,
                                       std::string trace_path = {}) {
  EpisodeReport r;
  r.condition = condition;
  r.seed = seed;
  r.trace_path = std::move(trace_path);
  for (const auto& row : rows) {
    for (const auto& e : split_events(row.event)) {
      if (e.rfind("collision:", 0) == 0) {
        ++r.collisions_total;
        (e.size() >= 9 && e.compare(e.size() - 9, 9, ":overhead") == 0 ? r.collisions_overhead
                                                                        : r.collisions_ground)++;
      } else if (e.rfind("robot_collision:", 0) == 0) {
        ++r.robot_collisions;
      } else if (e == "sentinel") {
        ++r.announcements;
      } else if (e == "goal") {
        r.outcome = Outcome::Goal;
      } else if (e == "stalled") {
        r.outcome = Outcome::Stalled;
      } else if (e == "timeout") {
        r.outcome = Outcome::Timeout;
      }
    }
  }
  if (!rows.empty()) r.completion_time = rows.back().t;
  return r;
}

/// A maximal run of rows driven by the human branch, with the signs of its
/// successive turning runs (|w_z| above `w_tol`; straight rows are skipped).
struct OverrideInterval {
  std::size_t begin = 0;  // row index of the first human-driven row
  std::size_t end = 0;    // one past the last
  std::vector<int> turn_signs;
  bool returns_to_apf = false;  // the next row is driven by the planner
};

inline std::vector<OverrideInterval> override_intervals(const std::vector<TraceRow>& rows, double w_tol = 1e-3) {
  std::vector<OverrideInterval> out;
  for (std::size_t i = 0; i < rows.size();) {
    if (rows[i].source != CommandSource::Human) {
      ++i;
      continue;
    }
    OverrideInterval iv;
    iv.begin = i;
    for (; i < rows.size() && rows[i].source == CommandSource::Human; ++i) {
      const double w = rows[i].cmd.w_z;
      if (std::abs(w) <= w_tol) continue;
      const int s = w > 0 ? 1 : -1;
      if (iv.turn_signs.empty() || iv.turn_signs.back() != s) iv.turn_signs.push_back(s);
    }
    iv.end = i;
    iv.returns_to_apf = i < rows.size() && rows[i].source == CommandSource::Apf;
    out.push_back(std::move(iv));
  }
  return out;
}

/// One avoidance turn, one opposite recovery turn, then back to the planner.
inline bool is_turn_then_recover(const OverrideInterval& iv) {
  return iv.turn_signs.size() == 2 && iv.turn_signs[0] == -iv.turn_signs[1] && iv.returns_to_apf;
}

inline std::string format_trace_summary(const std::vector<TraceRow>& rows) {
  if (rows.empty()) return "empty trace\n";
  const auto rep = report_from_trace(rows, Condition::CrossView, 0);
  std::string out = fmt::format("duration_s={:.2f} outcome={} collisions_total={} ground={} overhead={} sentinel={}\n",
                                rows.back().t, to_string(rep.outcome), rep.collisions_total, rep.collisions_ground,
                                rep.collisions_overhead, rep.announcements);
  for (const auto& iv : override_intervals(rows)) {
    std::string signs;
    for (int s : iv.turn_signs) signs += s > 0 ? '+' : '-';
    out += fmt::format("override t=[{:.2f}, {:.2f}] turns={} returns_to_apf={} zone_profile={}\n", rows[iv.begin].t,
                       rows[iv.end - 1].t, signs.empty() ? "none" : signs, iv.returns_to_apf ? "yes" : "no",
                       is_turn_then_recover(iv) ? "turn+recover" : "other");
  }
  for (const auto& row : rows)
    for (const auto& e : split_events(row.event))
      if (e.rfind("collision:", 0) == 0 || e.rfind("robot_collision:", 0) == 0)
        out += fmt::format("{:.2f} {}\n", row.t, e);
  return out;
}

/// Two panels: the top-down trajectories (with obstacle footprints when a scene is
/// given) and the v_x / w_z profile over time with human-driven spans shaded.
inline std::string render_trace_svg(const std::vector<TraceRow>& rows, const Scene* scene = nullptr) {
  const double W = 900, H1 = 300, H2 = 260, pad = 40;
  double x0 = 0, x1 = 1, y0 = -1, y1 = 1;
  if (scene) {
    x0 = scene->corridor.min.x(), x1 = scene->corridor.max.x();
    y0 = scene->corridor.min.y(), y1 = scene->corridor.max.y();
  }
  for (const auto& r : rows) {
    x0 = std::min({x0, r.robot.x, r.human.x}), x1 = std::max({x1, r.robot.x, r.human.x});
    y0 = std::min({y0, r.robot.y, r.human.y}), y1 = std::max({y1, r.robot.y, r.human.y});
  }
  const double sc = std::min((W - 2 * pad) / (x1 - x0), (H1 - 2 * pad) / (y1 - y0));
  auto px = [&](double x) { return pad + (x - x0) * sc; };
  auto py = [&](double y) { return H1 - pad - (y - y0) * sc; };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"monospace\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H1 + H2);
  s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#999\"/>\n",
                   px(x0), py(y1), (x1 - x0) * sc, (y1 - y0) * sc);
  if (scene) {
    for (const auto& ob : scene->obstacles) {
      const char* style = ob.kind == ObstacleKind::Ground ? "fill=\"#bbb\" stroke=\"#555\""
                                                          : "fill=\"none\" stroke=\"#c33\" stroke-dasharray=\"4 3\"";
      if (ob.shape == ObstacleShape::AxisAlignedBox) {
        s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" {}/>\n",
                         px(ob.center.x() - ob.half_extent.x()), py(ob.center.y() + ob.half_extent.y()),
                         2 * ob.half_extent.x() * sc, 2 * ob.half_extent.y() * sc, style);
      } else {
        s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"{:.1f}\" {}/>\n", px(ob.center.x()),
                         py(ob.center.y()), ob.radius * sc, style);
      }
      s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"#333\">{}</text>\n", px(ob.center.x()) - 12,
                       py(ob.center.y()) + 4, ob.id);
    }
    s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"5\" fill=\"green\"/>\n", px(scene->goal.x()),
                     py(scene->goal.y()));
  }
  auto polyline = [&](auto get, const char* color) {
    std::string pts;
    for (const auto& r : rows) {
      const Vec2 p = get(r);
      pts += fmt::format("{:.1f},{:.1f} ", px(p.x()), py(p.y()));
    }
    return fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", pts, color);
  };
  s += polyline([](const TraceRow& r) { return Vec2(r.robot.x, r.robot.y); }, "#1f5fbf");
  s += polyline([](const TraceRow& r) { return Vec2(r.human.x, r.human.y); }, "#e08a00");
  s += fmt::format("<text x=\"{}\" y=\"16\">robot (blue), user (orange), ground (grey), overhead (red dashed)</text>\n",
                   pad);

  // Velocity profile.
  const double t1 = rows.empty() ? 1.0 : std::max(rows.back().t, 1e-6);
  const double top = H1 + pad / 2, bottom = H1 + H2 - pad;
  const double vmax = 1.5;
  auto tx = [&](double t) { return pad + t / t1 * (W - 2 * pad); };
  auto vy = [&](double v) { return (top + bottom) / 2 - v / vmax * (bottom - top) / 2; };
  for (const auto& iv : override_intervals(rows)) {
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#fde8c8\"/>\n",
                     tx(rows[iv.begin].t), top, std::max(1.0, tx(rows[iv.end - 1].t) - tx(rows[iv.begin].t)),
                     bottom - top);
  }
  s += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#999\"/>\n", pad, vy(0), W - pad,
                   vy(0));
  auto profile = [&](auto get, const char* color) {
    std::string pts;
    for (const auto& r : rows) pts += fmt::format("{:.1f},{:.1f} ", tx(r.t), vy(get(r)));
    return fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"/>\n", pts, color);
  };
  s += profile([](const TraceRow& r) { return r.cmd.v_x; }, "#1f5fbf");
  s += profile([](const TraceRow& r) { return r.cmd.w_z; }, "#b02a2a");
  s += fmt::format("<text x=\"{}\" y=\"{:.1f}\">v_x m/s (blue), w_z rad/s (red); shaded: user-branch override; "
                   "t = 0..{:.1f} s</text>\n",
                   pad, H1 + H2 - 12, t1);
  s += "</svg>\n";
  return s;
}

}  // namespace coego
