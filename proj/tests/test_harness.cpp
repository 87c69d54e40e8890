#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "coego/harness.hpp"
#include "support.hpp"

using namespace coego;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string canonical_text() { return slurp(testsupport::scenario_path("canonical")); }

TraceRow row(double t, CommandSource src, double w) {
  TraceRow r;
  r.t = t;
  r.source = src;
  r.a = src == CommandSource::Human ? 1 : 0;
  r.cmd.w_z = w;
  return r;
}

}  // namespace

TEST_CASE("canonical scenario loads with three ground and two overhead obstacles") {
  const auto& cfg = testsupport::canonical();
  REQUIRE(cfg.scene.obstacles.size() == 5);
  const auto overhead = std::count_if(cfg.scene.obstacles.begin(), cfg.scene.obstacles.end(),
                                      [](const Obstacle& o) { return o.kind == ObstacleKind::Overhead; });
  CHECK(overhead == 2);
  for (const auto& o : cfg.scene.obstacles) {
    if (o.kind == ObstacleKind::Overhead) {
      CHECK(o.z_min > cfg.costmap.passthrough_z_max);
      CHECK(o.z_min < cfg.scene.human.head_height);
    }
  }
}

TEST_CASE("zero costmap resolution names the field") {
  const auto text = canonical_text() + "\ncostmap:\n  resolution_m: 0\n";
  try {
    parse_scenario_text(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "costmap.resolution_m");
  }
}

TEST_CASE("unknown key is a parse error with its location") {
  const auto text = canonical_text() + "\nwalker:\n  speeed: 0.4\n";
  try {
    parse_scenario_text(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("walker.speeed") != std::string::npos);
    CHECK(msg.find("line") != std::string::npos);
  }
}

TEST_CASE("malformed YAML is a parse error") {
  CHECK_THROWS_AS(parse_scenario_text("scene: {obstacles: [\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("costmap: 3\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("costmap:\n  resolution_m: fine\n"), ParseError);
}

TEST_CASE("goal inside an obstacle is rejected") {
  try {
    load_scenario(testsupport::data_path("data/goal_in_obstacle.yaml"));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field().rfind("scene.goal", 0) == 0);
  }
}

TEST_CASE("missing scenario file") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.yaml"), ConfigError);
}

TEST_CASE("effective configuration matches the golden file") {
  const auto golden = slurp(testsupport::data_path("golden/canonical.effective.yaml"));
  REQUIRE_FALSE(golden.empty());
  CHECK(dump_effective(testsupport::canonical()) == golden);
}

TEST_CASE("effective configuration reloads to the same configuration") {
  const auto once = dump_effective(testsupport::canonical());
  CHECK(dump_effective(parse_scenario_text(once)) == once);
  CHECK(dump_effective(parse_scenario_text("{}")) == dump_effective(parse_scenario_text(dump_effective(ScenarioConfig{}))));
}

TEST_CASE("seed ranges") {
  CHECK(parse_seed_range("0..19") == std::pair<std::uint64_t, std::uint64_t>{0, 19});
  CHECK(parse_seed_range("7") == std::pair<std::uint64_t, std::uint64_t>{7, 7});
  CHECK_FALSE(parse_seed_range("5..3"));
  CHECK_FALSE(parse_seed_range("a..3"));
  CHECK_FALSE(parse_seed_range(""));
  CHECK_FALSE(parse_seed_range("1..2x"));
}

TEST_CASE("sweep spec validation") {
  SweepSpec s;
  CHECK_NOTHROW(validate(s));
  CHECK(s.episode_count() == 60);
  s.conditions.clear();
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = {};
  s.jobs = 0;
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("sample statistics") {
  const auto s = stat_of({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  CHECK(s.mean == 5.0);
  CHECK(s.std == Catch::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(stat_of({3.0}).std == 0.0);
  CHECK(stat_of({}).n == 0);
}

TEST_CASE("small sweep writes traces and summaries that traces reproduce") {
  const auto& cfg = testsupport::canonical();
  SweepSpec spec;
  spec.seed_first = 0;
  spec.seed_last = 1;
  spec.out_dir = testsupport::scratch_dir("sweep");
  spec.jobs = 3;
  const auto reports = run_sweep(cfg, spec);
  write_sweep_outputs(spec, reports);

  REQUIRE(reports.size() == 6);
  std::size_t traces = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(spec.out_dir))
    traces += e.path().extension() == ".csv";
  CHECK(traces == 6);

  const auto summary = summarize(reports);
  REQUIRE(summary.size() == 3);
  const auto table = format_summary(summary);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
  CHECK(slurp(spec.out_dir / "summary.txt") == table);

  std::vector<EpisodeReport> rebuilt;
  for (const auto& r : reports) {
    CHECK(r.condition == spec.conditions[(&r - reports.data()) / 2]);
    CHECK(r.collisions_total == r.collisions_ground + r.collisions_overhead);
    const auto rows = read_trace(r.trace_path);
    REQUIRE_FALSE(rows.empty());
    const auto again = report_from_trace(rows, r.condition, r.seed, r.trace_path);
    CHECK(again.outcome == r.outcome);
    CHECK(again.completion_time == Catch::Approx(r.completion_time).margin(0.005));
    CHECK(again.collisions_total == r.collisions_total);
    CHECK(again.collisions_ground == r.collisions_ground);
    CHECK(again.collisions_overhead == r.collisions_overhead);
    CHECK(again.robot_collisions == r.robot_collisions);
    CHECK(again.announcements == r.announcements);
    rebuilt.push_back(again);
  }
  CHECK(format_summary(summarize(rebuilt)) == table);

  // Parallelism does not change results.
  SweepSpec serial = spec;
  serial.jobs = 1;
  serial.out_dir.clear();
  const auto serial_reports = run_sweep(cfg, serial);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(serial_reports[i].completion_time == reports[i].completion_time);
    CHECK(serial_reports[i].collisions_total == reports[i].collisions_total);
  }
}

TEST_CASE("report line carries the trace path") {
  EpisodeReport r;
  r.condition = Condition::CrossView;
  r.seed = 7;
  r.outcome = Outcome::Goal;
  r.completion_time = 35.2;
  r.trace_path = "runs/crossview/seed_007.csv";
  const auto line = format_report(r);
  CHECK(line.rfind("condition=crossview seed=7 outcome=goal completion_time_s=35.20 ", 0) == 0);
  CHECK(line.find("trace=runs/crossview/seed_007.csv") != std::string::npos);
  r.outcome = Outcome::Stalled;
  CHECK(format_report(r).find("completion_time_s=DNF(stalled)") != std::string::npos);
  CHECK(trace_relpath(Condition::SingleView, 3) == std::filesystem::path("singleview/seed_003.csv"));
}

TEST_CASE("trace parsing round-trips written rows and rejects bad input") {
  TraceRow a = row(0.02, CommandSource::Apf, 0.1);
  a.min_roi_depth = 1.5;
  TraceRow b = row(0.04, CommandSource::Human, -0.8);
  b.event = "collision:lamp:overhead;sentinel";
  std::stringstream ss(trace_header() + format_trace_row(a) + format_trace_row(b));
  const auto rows = parse_trace(ss);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].min_roi_depth == 1.5);
  CHECK_FALSE(rows[1].min_roi_depth);
  CHECK(rows[1].source == CommandSource::Human);
  CHECK(rows[1].cmd.w_z == -0.8);
  CHECK(split_events(rows[1].event) == std::vector<std::string>{"collision:lamp:overhead", "sentinel"});

  std::stringstream bad_header("t,x\n");
  CHECK_THROWS_AS(parse_trace(bad_header), TraceFormatError);
  std::stringstream short_row(trace_header() + "1,2,3\n");
  CHECK_THROWS_AS(parse_trace(short_row), TraceFormatError);
  std::stringstream bad_source(trace_header() + "0.02,0,0,0,0,0,jet,0,0,0,0,,\n");
  CHECK_THROWS_AS(parse_trace(bad_source), TraceFormatError);
}

TEST_CASE("override intervals and the turn-then-recover shape") {
  std::vector<TraceRow> rows{row(0.0, CommandSource::Apf, 0.2),    row(0.1, CommandSource::Human, 0.8),
                             row(0.2, CommandSource::Human, 0.8),  row(0.3, CommandSource::Human, 0.0),
                             row(0.4, CommandSource::Human, -0.8), row(0.5, CommandSource::Apf, 0.0)};
  auto ivs = override_intervals(rows);
  REQUIRE(ivs.size() == 1);
  CHECK(ivs[0].begin == 1);
  CHECK(ivs[0].end == 5);
  CHECK(ivs[0].turn_signs == std::vector<int>{1, -1});
  CHECK(is_turn_then_recover(ivs[0]));

  rows[3].cmd.w_z = 0.5;  // turn, recover, turn again
  rows.insert(rows.begin() + 5, row(0.45, CommandSource::Human, 0.6));
  ivs = override_intervals(rows);
  CHECK_FALSE(is_turn_then_recover(ivs[0]));

  rows = {row(0.0, CommandSource::Human, 0.8), row(0.1, CommandSource::Human, -0.8)};
  ivs = override_intervals(rows);
  CHECK_FALSE(ivs[0].returns_to_apf);
  CHECK_FALSE(is_turn_then_recover(ivs[0]));
}

TEST_CASE("trace summary and plot") {
  const auto& cfg = testsupport::canonical();
  const auto dir = testsupport::scratch_dir("plot");
  EpisodeOptions opts;
  opts.trace_path = dir / "cross.csv";
  run_episode(cfg, Condition::CrossView, 0, opts);
  const auto rows = read_trace(*opts.trace_path);
  const auto text = format_trace_summary(rows);
  CHECK(text.find("outcome=goal") != std::string::npos);
  CHECK(text.find("zone_profile=turn+recover") != std::string::npos);
  const auto scene = episode_scene(cfg, 0);
  const auto svg = render_trace_svg(rows, &scene);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("lamp") != std::string::npos);
}
