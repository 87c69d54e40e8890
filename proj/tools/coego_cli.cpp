// coego: run, sweep, inspect and validate guide-robot episodes.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <ext/stdio_filebuf.h>
#include <sys/wait.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "coego/harness.hpp"
#include "coego/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace coego;

namespace {

// Spawns `sh -c cmd` and talks the describer line protocol over its stdin/stdout.
class ProcessDescriber final : public Describer {
 public:
  explicit ProcessDescriber(const std::string& cmd) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw std::runtime_error("describer: pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw std::runtime_error("describer: fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]), close(to_child[1]), close(from_child[0]), close(from_child[1]);
      execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    out_buf_ = std::make_unique<__gnu_cxx::stdio_filebuf<char>>(to_child[1], std::ios::out);
    in_buf_ = std::make_unique<__gnu_cxx::stdio_filebuf<char>>(from_child[0], std::ios::in);
    out_ = std::make_unique<std::ostream>(out_buf_.get());
    in_ = std::make_unique<std::istream>(in_buf_.get());
    stream_ = std::make_unique<StreamDescriber>(*in_, *out_);
  }

  ~ProcessDescriber() override {
    stream_.reset();
    out_.reset();
    out_buf_.reset();  // closes the child's stdin
    in_.reset();
    in_buf_.reset();
    int status = 0;
    waitpid(pid_, &status, 0);
  }

  std::string describe(const SceneSummary& summary, double min_depth, const std::string& prompt) override {
    return stream_->describe(summary, min_depth, prompt);
  }

 private:
  pid_t pid_ = -1;
  std::unique_ptr<__gnu_cxx::stdio_filebuf<char>> out_buf_, in_buf_;
  std::unique_ptr<std::ostream> out_;
  std::unique_ptr<std::istream> in_;
  std::unique_ptr<StreamDescriber> stream_;
};

fs::path resolve_scenario(const std::string& ref) {
  if (fs::exists(ref)) return ref;
  const fs::path shipped = fs::path(COEGO_SCENARIO_DIR) / (ref + ".yaml");
  if (fs::exists(shipped)) return shipped;
  throw ConfigError("scenario not found: " + ref + " (not a file, and no " + shipped.string() + ")");
}

Condition condition_arg(const std::string& s) {
  if (const auto c = parse_condition(s)) return *c;
  throw CLI::ValidationError("--condition", "expected unassisted, singleview or crossview, got '" + s + "'");
}

std::unique_ptr<Describer> make_describer(const std::string& cmd) {
  if (cmd.empty()) return nullptr;
  return std::make_unique<ProcessDescriber>(cmd);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Guide-robot navigation simulator: episodes, sweeps, trace plots, scenario checks."};
  app.require_subcommand(1);

  std::string scenario, condition = "crossview", out, describer_cmd, seeds = "0..19", trace_file, svg_path;
  std::vector<std::string> conditions;
  std::uint64_t seed = 0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<double> costmap_at;
  bool print_effective = false;

  auto* run = app.add_subcommand("run", "run one episode and print its report");
  run->add_option("--scenario", scenario, "scenario file, or the name of a shipped scenario")->required();
  run->add_option("--condition", condition, "unassisted | singleview | crossview")->capture_default_str();
  run->add_option("--seed", seed, "episode seed")->capture_default_str();
  run->add_option("--out", out, "output directory for the trace (default: runs)");
  run->add_option("--describer-cmd", describer_cmd, "external describer program (line protocol on stdin/stdout)");
  run->add_option("--costmap-at", costmap_at, "also export the robot costmap at this time (s)");

  auto* sweep = app.add_subcommand("sweep", "run conditions x seeds and summarize");
  sweep->add_option("--scenario", scenario, "scenario file or shipped name")->required();
  sweep->add_option("--condition", conditions, "condition(s); default all three");
  sweep->add_option("--seeds", seeds, "inclusive seed range A..B")->capture_default_str();
  sweep->add_option("--out", out, "output directory (default: sweep)");
  sweep->add_option("--jobs", jobs, "episodes run in parallel")->check(CLI::PositiveNumber);
  sweep->add_option("--describer-cmd", describer_cmd, "external describer program");

  auto* trace = app.add_subcommand("trace", "summarize a trace CSV and plot it as SVG");
  trace->add_option("trace", trace_file, "trace CSV written by run or sweep")->required()->check(CLI::ExistingFile);
  trace->add_option("--svg", svg_path, "SVG output (default: next to the trace)");
  trace->add_option("--scenario", scenario, "draw this scenario's obstacles");
  trace->add_option("--seed", seed, "seed the trace was run with (obstacle jitter)");

  auto* check = app.add_subcommand("check", "validate a scenario without running it");
  check->add_option("scenario_pos", scenario, "scenario file or shipped name");
  check->add_option("--scenario", scenario, "scenario file or shipped name");
  check->add_flag("--print-effective", print_effective, "print the fully resolved configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load_scenario(resolve_scenario(scenario));
      const Condition c = condition_arg(condition);
      const fs::path dir = out.empty() ? fs::path("runs") : fs::path(out);
      auto describer = make_describer(describer_cmd);
      Episode ep(cfg, c, seed);
      EpisodeOptions opts;
      opts.trace_path = dir / trace_relpath(c, seed);
      opts.describer = describer.get();
      opts.costmap_snapshot_time = costmap_at;
      const auto report = ep.run(opts);
      std::cout << format_report(report) << '\n';
      if (costmap_at) {
        if (const auto& snap = ep.costmap_snapshot()) {
          auto base = *opts.trace_path;
          base.replace_extension();
          write_text(base.string() + ".costmap.txt", costmap_to_text(*snap));
          write_text(base.string() + ".costmap.csv", costmap_to_csv(*snap));
        } else {
          std::cerr << "coego: episode ended before t=" << *costmap_at << " s; no costmap exported\n";
        }
      }
      return 0;
    }

    if (*sweep) {
      const auto cfg = load_scenario(resolve_scenario(scenario));
      SweepSpec spec;
      if (!conditions.empty()) {
        spec.conditions.clear();
        for (const auto& s : conditions) spec.conditions.push_back(condition_arg(s));
      }
      const auto range = parse_seed_range(seeds);
      if (!range) throw CLI::ValidationError("--seeds", "expected A..B with A <= B, got '" + seeds + "'");
      spec.seed_first = range->first;
      spec.seed_last = range->second;
      spec.out_dir = out.empty() ? fs::path("sweep") : fs::path(out);
      spec.jobs = jobs;
      auto describer = make_describer(describer_cmd);
      const auto reports = run_sweep(cfg, spec, describer.get());
      write_sweep_outputs(spec, reports);
      std::cout << format_summary(summarize(reports));
      std::cout << "reports: " << (spec.out_dir / "reports.txt").string() << '\n';
      return 0;
    }

    if (*trace) {
      const auto rows = read_trace(trace_file);
      std::optional<Scene> scene;
      if (!scenario.empty()) scene = episode_scene(load_scenario(resolve_scenario(scenario)), seed);
      fs::path svg = svg_path.empty() ? fs::path(trace_file).replace_extension(".svg") : fs::path(svg_path);
      write_text(svg, render_trace_svg(rows, scene ? &*scene : nullptr));
      std::cout << format_trace_summary(rows) << "svg: " << svg.string() << '\n';
      return 0;
    }

    if (*check) {
      if (scenario.empty()) throw CLI::ValidationError("check", "a scenario is required");
      const auto path = resolve_scenario(scenario);
      const auto cfg = load_scenario(path);
      if (print_effective) {
        std::cout << dump_effective(cfg);
      } else {
        std::cout << path.string() << ": ok (" << cfg.scene.obstacles.size() << " obstacles)\n";
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ValidationError& e) {
    std::cerr << "coego: validation error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "coego: parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "coego: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
