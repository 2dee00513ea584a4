// Command-line front end: run, sweep, resume, export, validate-config.
// Exit status: 0 success, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ompac/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ompac;
using namespace ompac::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct RunFlags {
  std::string config;
  std::string env;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> generations;
  std::optional<std::size_t> population;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> checkpoint_interval;
  std::optional<std::uint64_t> halt_after;
  std::string out;
  bool no_episode_log = false;
};

json overrides_from(const RunFlags& f) {
  json o = json::object();
  if (!f.env.empty()) o["environment"] = f.env;
  if (!f.mode.empty()) o["mode"] = f.mode;
  if (f.seed) o["seed"] = *f.seed;
  if (f.generations) o["generations"] = *f.generations;
  if (f.population) o["population_size"] = *f.population;
  if (f.episodes) o["episodes_per_generation"] = *f.episodes;
  if (f.hidden) o["network"]["hidden"] = *f.hidden;
  if (f.workers) o["workers"] = *f.workers;
  if (f.checkpoint_interval) o["checkpoint_interval"] = *f.checkpoint_interval;
  if (!f.out.empty()) o["output_dir"] = f.out;
  if (f.no_episode_log) o["log_episodes"] = false;
  return o;
}

RunConfig load_run_config(const RunFlags& f) {
  json base = f.config.empty() ? json::object() : load_json_file(f.config);
  return parse_run_config(base, overrides_from(f));
}

void print_summary(const fs::path& dir) {
  std::ifstream in(dir / kSummaryJson);
  if (!in) return;
  const RunSummary s = json::parse(in).get<RunSummary>();
  std::cout << "generations " << s.generations_completed << ", final mean score "
            << s.final_mean_score << " (sd " << s.final_stddev << "), best "
            << s.best_mean_score << (s.halted ? ", halted" : "") << '\n'
            << "artifacts in " << dir.string() << '\n';
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("-c,--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("-e,--env", f.env, "sz-tetris | tetris-10x10 | chain | gridworld");
  cmd->add_option("-m,--mode", f.mode, "ompac | baseline");
  cmd->add_option("-s,--seed", f.seed, "root seed");
  cmd->add_option("-g,--generations", f.generations, "number of generations");
  cmd->add_option("-n,--population", f.population, "instances N");
  cmd->add_option("--episodes", f.episodes, "episodes per generation");
  cmd->add_option("--hidden", f.hidden, "hidden units (0: linear)");
  cmd->add_option("-w,--workers", f.workers, "worker threads (0: min(N, cores))");
  cmd->add_option("--checkpoint-interval", f.checkpoint_interval, "generations between checkpoints");
  cmd->add_option("-o,--out", f.out, "artifact directory");
  cmd->add_flag("--no-episode-log", f.no_episode_log, "skip episodes.csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-parameter adaptation by parallel algorithm competition"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  add_run_flags(run_cmd, run_flags);
  run_cmd->add_option("--halt-after", run_flags.halt_after,
                      "stop after this many generations, leaving a checkpoint");

  RunFlags validate_flags;
  auto* validate_cmd = app.add_subcommand("validate-config", "check a config and print it resolved");
  add_run_flags(validate_cmd, validate_flags);

  std::string sweep_file;
  std::optional<std::size_t> sweep_workers;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of starting meta-parameters");
  sweep_cmd->add_option("config", sweep_file, "sweep JSON file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("-w,--workers", sweep_workers, "concurrent cells");
  sweep_cmd->add_option("-o,--out", sweep_out, "sweep output directory");

  std::string resume_target;
  std::optional<std::uint64_t> resume_generations;
  std::optional<std::uint64_t> resume_halt;
  auto* resume_cmd = app.add_subcommand("resume", "continue a run from a checkpoint");
  resume_cmd->add_option("target", resume_target, "checkpoint file or artifact directory")
      ->required()
      ->check(CLI::ExistingPath);
  resume_cmd->add_option("-g,--generations", resume_generations, "new total generations");
  resume_cmd->add_option("--halt-after", resume_halt, "stop after this many generations");

  std::string export_dir;
  std::size_t export_window = 10;
  std::string export_out;
  auto* export_cmd = app.add_subcommand("export", "write plot data for a finished run");
  export_cmd->add_option("dir", export_dir, "artifact directory")->required();
  export_cmd->add_option("--window", export_window, "smoothing window in generations")
      ->capture_default_str();
  export_cmd->add_option("-o,--out", export_out, "destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate_cmd) {
      const RunConfig cfg = load_run_config(validate_flags);
      std::cout << to_json(cfg).dump(2) << '\n';
    } else if (*run_cmd) {
      const RunConfig cfg = load_run_config(run_flags);
      RunControl control;
      control.halt_after = run_flags.halt_after;
      print_summary(run_experiment(cfg, control));
    } else if (*resume_cmd) {
      fs::path cp = resume_target;
      if (fs::is_directory(cp)) {
        const auto latest = latest_checkpoint(cp);
        if (!latest) {
          std::cerr << "error: no checkpoint under " << cp.string() << '\n';
          return kExitRuntime;
        }
        cp = *latest;
      }
      RunControl control;
      control.halt_after = resume_halt;
      print_summary(resume_experiment(cp, resume_generations, control));
    } else if (*sweep_cmd) {
      json j = load_json_file(sweep_file);
      if (sweep_workers) j["workers"] = *sweep_workers;
      if (!sweep_out.empty()) j["output_dir"] = sweep_out;
      const SweepConfig sweep = parse_sweep_config(j);
      const auto cells = run_sweep(sweep);
      std::size_t failed = 0;
      for (const auto& c : cells) {
        if (c.ok) continue;
        ++failed;
        std::cerr << "cell " << c.dir.string() << " failed: " << c.error << '\n';
      }
      std::cout << cells.size() - failed << "/" << cells.size() << " cells finished; table in "
                << (sweep.output_dir / kComparisonCsv).string() << '\n';
      if (failed) return kExitRuntime;
    } else if (*export_cmd) {
      std::optional<fs::path> dest;
      if (!export_out.empty()) dest = export_out;
      const ExportResult r = export_curves(export_dir, export_window, dest);
      std::cout << r.points << " curve points in " << r.curve.string() << "\n"
                << "trajectory in " << r.trajectory.string() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
