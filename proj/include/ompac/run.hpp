#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ompac/metaparams.hpp"
#include "ompac/population.hpp"

namespace ompac {

enum class Mode { kOmpac, kBaseline };

std::string_view to_string(Mode m) noexcept;
Mode mode_from_string(std::string_view name);

struct RunSettings {
  Mode mode = Mode::kOmpac;
  std::uint64_t seed = 1;
  PopulationConfig population;
  std::uint64_t generations = 2000;
  MetaParams start;
  NetworkShape network;
  std::size_t workers = 0;                 // 0: one per core, capped at N
  std::uint64_t checkpoint_interval = 100; // generations; 0 keeps only first and last
  std::uint64_t summary_window = 1000;     // trailing episodes per instance
  bool log_episodes = true;
};

// Lets callers stop a run early, as if it had been interrupted.
struct RunControl {
  std::optional<std::uint64_t> halt_after;  // generations completed
};

struct RunSummary {
  Mode mode = Mode::kOmpac;
  std::uint64_t generations_completed = 0;
  std::uint64_t episodes_per_instance = 0;
  std::uint64_t window_generations = 0;
  double final_mean_score = 0.0;                  // per episode, over the trailing window
  double final_stddev = 0.0;                      // across instances
  std::vector<double> final_instance_scores;      // per slot, over the trailing window
  std::uint64_t best_generation = 0;
  std::size_t best_instance = 0;
  double best_mean_score = 0.0;                   // best per-episode mean of one instance in one generation
  std::size_t elite = 0;
  MetaParams elite_psi;
  MetaParams mean_psi;
  std::uint64_t failures = 0;
  std::uint64_t uniform_fallbacks = 0;
  bool halted = false;
};

void to_json(nlohmann::json& j, const RunSummary& s);
void from_json(const nlohmann::json& j, RunSummary& s);

inline constexpr int kCheckpointFormatVersion = 1;

// Everything needed to continue a run bit-exactly. Random streams are derived
// from (seed, purpose, instance, generation), so no generator state is stored.
struct Checkpoint {
  nlohmann::json config;  // snapshot supplied by the caller of run()
  Mode mode = Mode::kOmpac;
  std::uint64_t seed = 0;
  Population population;
  std::vector<std::int64_t> lineage;              // parent slot of each instance, -1 at start
  std::vector<std::vector<double>> score_history; // per generation, per instance
  std::uint64_t failures = 0;
  std::uint64_t uniform_fallbacks = 0;
  std::map<std::string, std::uintmax_t> log_sizes;  // bytes of each log at this point
};

void to_json(nlohmann::json& j, const Checkpoint& c);
void from_json(const nlohmann::json& j, Checkpoint& c);

Checkpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir,
                                      std::uint64_t generation);
// Most recent checkpoint in out_dir/checkpoints, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& out_dir);

// Log files written into the output directory.
inline constexpr std::string_view kEpisodesCsv = "episodes.csv";
inline constexpr std::string_view kGenerationsCsv = "generations.csv";
inline constexpr std::string_view kMetaparamsCsv = "metaparams.csv";
inline constexpr std::string_view kSummaryJson = "summary.json";

inline constexpr std::string_view kEpisodesHeader =
    "instance,generation,episode,score,return,tau,steps";
inline constexpr std::string_view kGenerationsHeader =
    "generation,instance,score,alpha,gamma,lambda,tau0,tauk,beta,parent,elite,failed";
inline constexpr std::string_view kMetaparamsHeader =
    "generation,episodes,alpha,gamma,lambda,tau0,tauk,beta,mean_score";
inline constexpr std::string_view kBaselineCurveHeader = "generation,episodes,mean_score";

// Executes settings.generations generations (evaluate, barrier, select and
// mutate) and writes the logs, checkpoints and summary into out_dir.
RunSummary run(const RunSettings& settings, const EnvironmentFactory& factory,
               const std::filesystem::path& out_dir, const nlohmann::json& config_snapshot,
               const RunControl& control = {});

// Continues from a checkpoint. Logs in out_dir are cut back to the sizes they
// had when the checkpoint was written, so the finished artifacts match an
// uninterrupted run byte for byte.
RunSummary resume(const Checkpoint& checkpoint, const RunSettings& settings,
                  const EnvironmentFactory& factory, const std::filesystem::path& out_dir,
                  const RunControl& control = {});

}  // namespace ompac
