#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ompac/diagnostic_envs.hpp"
#include "ompac/run.hpp"
#include "ompac/tetris.hpp"

namespace ompac::harness {

// A configuration that failed validation; `problems` names each offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Missing or malformed run artifacts.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvironmentKind { kSZTetris, kTetris10, kChain, kGridWorld };

std::string_view to_string(EnvironmentKind k) noexcept;
EnvironmentKind environment_from_string(std::string_view name);

struct RunConfig {
  EnvironmentKind environment = EnvironmentKind::kSZTetris;
  RunSettings settings;
  tetris::TetrisConfig tetris = tetris::TetrisConfig::sz_tetris();
  ChainConfig chain = ChainConfig::random_walk();
  GridWorldConfig gridworld;
  std::filesystem::path output_dir;
};

// Name of the environment variable holding the default output root.
inline constexpr const char* kOutputRootEnv = "OMPAC_OUTPUT_ROOT";

// Defaults that depend on the environment (hidden units, board, reward scale,
// encoding, summary window), before any user values are applied.
nlohmann::json default_config(EnvironmentKind env);

// Parses and validates a config object. `overrides` is merged on top first
// (JSON merge patch), which is how command-line flags take precedence.
// Throws ConfigError listing every problem found.
RunConfig parse_run_config(const nlohmann::json& j, const nlohmann::json& overrides = {});

// Fully resolved config, as written to config.json in the artifact directory.
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json load_json_file(const std::filesystem::path& path);

EnvironmentFactory make_environment_factory(const RunConfig& cfg);

// Runs one experiment and returns its artifact directory, which holds
// config.json, the CSV logs, checkpoints/ and summary.json.
std::filesystem::path run_experiment(const RunConfig& cfg, const RunControl& control = {});

// Continues the run whose checkpoint is given. If `generations` is set, the
// run is extended (or shortened) to that total.
std::filesystem::path resume_experiment(const std::filesystem::path& checkpoint_file,
                                        std::optional<std::uint64_t> generations = {},
                                        const RunControl& control = {});

struct SweepConfig {
  nlohmann::json base;                               // a run config object
  std::map<std::string, std::vector<double>> grid;   // start meta-parameter -> values
  std::vector<Mode> modes = {Mode::kOmpac};
  std::filesystem::path output_dir;
  std::size_t workers = 1;                           // concurrent cells
};

SweepConfig parse_sweep_config(const nlohmann::json& j);

struct SweepCell {
  std::map<std::string, double> values;
  Mode mode = Mode::kOmpac;
  std::filesystem::path dir;
  bool ok = false;
  std::string error;
  double mean = 0.0;
  double stddev = 0.0;
};

inline constexpr std::string_view kComparisonCsv = "comparison.csv";

// Runs every grid cell as its own experiment and writes comparison.csv
// (one column per grid field, then mode, mean, stddev, status).
std::vector<SweepCell> run_sweep(const SweepConfig& sweep);

struct ExportResult {
  std::filesystem::path curve;       // smoothed mean score per episode
  std::filesystem::path trajectory;  // mean meta-parameters and beta per generation
  std::size_t points = 0;
};

// Smooths the per-generation mean score over `window` generations and writes
// the meta-parameter trajectories. Files go to `dest` (default: the artifact
// directory's export/ subdirectory).
ExportResult export_curves(const std::filesystem::path& artifact_dir, std::size_t window,
                           std::optional<std::filesystem::path> dest = {});

}  // namespace ompac::harness
