#include "ompac/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>

#include "ompac/csv.hpp"

namespace ompac {

namespace fs = std::filesystem;

std::string_view to_string(Mode m) noexcept { return m == Mode::kOmpac ? "ompac" : "baseline"; }

Mode mode_from_string(std::string_view name) {
  if (name == "ompac") return Mode::kOmpac;
  if (name == "baseline") return Mode::kBaseline;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const RunSummary& s) {
  j = nlohmann::json{{"mode", to_string(s.mode)},
                     {"generations_completed", s.generations_completed},
                     {"episodes_per_instance", s.episodes_per_instance},
                     {"window_generations", s.window_generations},
                     {"final_mean_score", s.final_mean_score},
                     {"final_stddev", s.final_stddev},
                     {"final_instance_scores", s.final_instance_scores},
                     {"best_generation", s.best_generation},
                     {"best_instance", s.best_instance},
                     {"best_mean_score", s.best_mean_score},
                     {"elite", s.elite},
                     {"elite_psi", s.elite_psi},
                     {"mean_psi", s.mean_psi},
                     {"failures", s.failures},
                     {"uniform_fallbacks", s.uniform_fallbacks},
                     {"halted", s.halted}};
}

void from_json(const nlohmann::json& j, RunSummary& s) {
  s.mode = mode_from_string(j.at("mode").get<std::string>());
  s.generations_completed = j.at("generations_completed").get<std::uint64_t>();
  s.episodes_per_instance = j.at("episodes_per_instance").get<std::uint64_t>();
  s.window_generations = j.at("window_generations").get<std::uint64_t>();
  s.final_mean_score = j.at("final_mean_score").get<double>();
  s.final_stddev = j.at("final_stddev").get<double>();
  s.final_instance_scores = j.at("final_instance_scores").get<std::vector<double>>();
  s.best_generation = j.at("best_generation").get<std::uint64_t>();
  s.best_instance = j.at("best_instance").get<std::size_t>();
  s.best_mean_score = j.at("best_mean_score").get<double>();
  s.elite = j.at("elite").get<std::size_t>();
  s.elite_psi = j.at("elite_psi").get<MetaParams>();
  s.mean_psi = j.at("mean_psi").get<MetaParams>();
  s.failures = j.at("failures").get<std::uint64_t>();
  s.uniform_fallbacks = j.at("uniform_fallbacks").get<std::uint64_t>();
  s.halted = j.at("halted").get<bool>();
}

void to_json(nlohmann::json& j, const Checkpoint& c) {
  auto instances = nlohmann::json::array();
  for (const Instance& inst : c.population.instances) {
    instances.push_back({{"id", inst.id},
                         {"psi", inst.learner.psi},
                         {"episode_index", inst.learner.episode_index},
                         {"network", inst.learner.net}});
  }
  j = nlohmann::json{
      {"version", kCheckpointFormatVersion},
      {"config", c.config},
      {"mode", to_string(c.mode)},
      {"seed", c.seed},
      {"generation", c.population.generation},
      {"population",
       {{"size", c.population.config.size},
        {"episodes_per_generation", c.population.config.episodes_per_generation},
        {"noise", c.population.config.noise}}},
      {"instances", instances},
      {"lineage", c.lineage},
      {"score_history", c.score_history},
      {"failures", c.failures},
      {"uniform_fallbacks", c.uniform_fallbacks},
      {"log_sizes", c.log_sizes}};
}

void from_json(const nlohmann::json& j, Checkpoint& c) {
  const int version = j.at("version").get<int>();
  if (version != kCheckpointFormatVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  c.config = j.at("config");
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.population = Population{};
  c.population.generation = j.at("generation").get<std::uint64_t>();
  const auto& pc = j.at("population");
  c.population.config.size = pc.at("size").get<std::size_t>();
  c.population.config.episodes_per_generation = pc.at("episodes_per_generation").get<std::size_t>();
  c.population.config.noise = pc.at("noise").get<NoiseConfig>();
  for (const auto& ji : j.at("instances")) {
    Instance inst;
    inst.id = ji.at("id").get<std::size_t>();
    inst.learner = LearnerState(ji.at("network").get<Network>(), ji.at("psi").get<MetaParams>(),
                                ji.at("episode_index").get<std::uint64_t>());
    c.population.instances.push_back(std::move(inst));
  }
  if (c.population.instances.size() != c.population.config.size)
    throw std::runtime_error("checkpoint instance count does not match the population size");
  c.lineage = j.at("lineage").get<std::vector<std::int64_t>>();
  c.score_history = j.at("score_history").get<std::vector<std::vector<double>>>();
  c.failures = j.at("failures").get<std::uint64_t>();
  c.uniform_fallbacks = j.at("uniform_fallbacks").get<std::uint64_t>();
  c.log_sizes = j.at("log_sizes").get<std::map<std::string, std::uintmax_t>>();
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return j.get<Checkpoint>();
}

void save_checkpoint(const Checkpoint& c, const fs::path& path) {
  // Write to a temporary name first so a crash never leaves a torn checkpoint.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out << nlohmann::json(c).dump();
    out.flush();
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path checkpoint_path(const fs::path& out_dir, std::uint64_t generation) {
  char name[32];
  std::snprintf(name, sizeof name, "gen_%06llu.json",
                static_cast<unsigned long long>(generation));
  return out_dir / "checkpoints" / name;
}

std::optional<fs::path> latest_checkpoint(const fs::path& out_dir) {
  const fs::path dir = out_dir / "checkpoints";
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("gen_", 0) != 0 || entry.path().extension() != ".json") continue;
    if (!best || entry.path().filename() > best->filename()) best = entry.path();
  }
  return best;
}

namespace {

std::string curve_name(std::size_t instance) {
  char name[48];
  std::snprintf(name, sizeof name, "runs/run_%02zu.csv", instance);
  return name;
}

RunSummary summarize(const Checkpoint& state, const RunSettings& settings, bool halted) {
  RunSummary s;
  s.mode = state.mode;
  s.halted = halted;
  const auto& pop = state.population;
  const std::size_t n = pop.instances.size();
  const double eps = static_cast<double>(pop.config.episodes_per_generation);
  s.generations_completed = pop.generation;
  s.episodes_per_instance = pop.generation * pop.config.episodes_per_generation;
  s.failures = state.failures;
  s.uniform_fallbacks = state.uniform_fallbacks;

  const auto& hist = state.score_history;
  if (pop.config.episodes_per_generation > 0 && !hist.empty()) {
    const std::uint64_t want =
        (settings.summary_window + pop.config.episodes_per_generation - 1) /
        pop.config.episodes_per_generation;
    s.window_generations = std::min<std::uint64_t>(std::max<std::uint64_t>(want, 1), hist.size());
    s.final_instance_scores.assign(n, 0.0);
    for (std::size_t g = hist.size() - s.window_generations; g < hist.size(); ++g)
      for (std::size_t k = 0; k < n; ++k) s.final_instance_scores[k] += hist[g][k];
    const double denom = eps * static_cast<double>(s.window_generations);
    for (double& v : s.final_instance_scores) v /= denom;
    double mean = 0.0;
    for (double v : s.final_instance_scores) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : s.final_instance_scores) var += (v - mean) * (v - mean);
    s.final_mean_score = mean;
    s.final_stddev = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;

    for (std::size_t g = 0; g < hist.size(); ++g)
      for (std::size_t k = 0; k < n; ++k)
        if (hist[g][k] / eps > s.best_mean_score) {
          s.best_mean_score = hist[g][k] / eps;
          s.best_generation = g;
          s.best_instance = k;
        }
    const auto& last = hist.back();
    s.elite = static_cast<std::size_t>(std::max_element(last.begin(), last.end()) - last.begin());
  }
  s.elite_psi = pop.instances[s.elite].learner.psi;
  MetaParams mean{0, 0, 0, 0, 0};
  for (const Instance& inst : pop.instances)
    for (std::size_t f = 0; f < MetaParams::kFieldCount; ++f)
      mean.field(f) += inst.learner.psi.field(f) / static_cast<double>(n);
  s.mean_psi = mean;
  return s;
}

struct Logs {
  std::unique_ptr<csv::Writer> episodes;
  csv::Writer generations;
  csv::Writer metaparams;
  std::vector<csv::Writer> curves;

  std::map<std::string, std::uintmax_t> sizes() const {
    std::map<std::string, std::uintmax_t> m;
    if (episodes) m[std::string(kEpisodesCsv)] = episodes->bytes();
    m[std::string(kGenerationsCsv)] = generations.bytes();
    m[std::string(kMetaparamsCsv)] = metaparams.bytes();
    for (std::size_t k = 0; k < curves.size(); ++k) m[curve_name(k)] = curves[k].bytes();
    return m;
  }
  void flush() {
    if (episodes) episodes->flush();
    generations.flush();
    metaparams.flush();
    for (auto& c : curves) c.flush();
  }
};

Logs open_logs(const fs::path& out_dir, const RunSettings& settings, std::size_t n) {
  Logs logs;
  if (settings.log_episodes)
    logs.episodes = std::make_unique<csv::Writer>(out_dir / kEpisodesCsv, kEpisodesHeader);
  logs.generations = csv::Writer(out_dir / kGenerationsCsv, kGenerationsHeader);
  logs.metaparams = csv::Writer(out_dir / kMetaparamsCsv, kMetaparamsHeader);
  if (settings.mode == Mode::kBaseline) {
    fs::create_directories(out_dir / "runs");
    for (std::size_t k = 0; k < n; ++k)
      logs.curves.emplace_back(out_dir / curve_name(k), kBaselineCurveHeader);
  }
  return logs;
}

void write_generation(Logs& logs, const GenerationReport& rep,
                      const std::vector<std::vector<EpisodeRecord>>& records,
                      const std::vector<std::int64_t>& lineage, std::size_t episodes) {
  using csv::number;
  if (logs.episodes) {
    for (const auto& per_instance : records)
      for (const EpisodeRecord& r : per_instance)
        logs.episodes->row({number(static_cast<std::uint64_t>(r.instance)), number(r.generation),
                            number(r.episode_index), number(r.score),
                            number(r.discounted_return), number(r.temperature),
                            number(r.steps)});
  }
  const std::size_t n = rep.scores.size();
  MetaParams mean{0, 0, 0, 0, 0};
  double mean_beta = 0.0;
  double mean_episodes = 0.0;
  double mean_score = 0.0;
  const double eps = static_cast<double>(episodes);
  for (std::size_t k = 0; k < n; ++k) {
    const MetaParams& psi = rep.psi_used[k];
    const double beta = inverse_temperature(psi, rep.episode_index[k]);
    logs.generations.row({number(rep.generation), number(static_cast<std::uint64_t>(k)),
                          number(rep.scores[k]), number(psi.alpha), number(psi.gamma),
                          number(psi.lambda), number(psi.tau0), number(psi.tauk), number(beta),
                          number(lineage[k]), number(k == rep.elite ? 1 : 0),
                          number(static_cast<int>(rep.failed[k]))});
    for (std::size_t f = 0; f < MetaParams::kFieldCount; ++f) mean.field(f) += psi.field(f);
    mean_beta += beta;
    mean_episodes += static_cast<double>(rep.episode_index[k]);
    mean_score += episodes > 0 ? rep.scores[k] / eps : 0.0;
    if (k < logs.curves.size())
      logs.curves[k].row({number(rep.generation), number(rep.episode_index[k]),
                          number(episodes > 0 ? rep.scores[k] / eps : 0.0)});
  }
  const double dn = static_cast<double>(n);
  logs.metaparams.row({number(rep.generation), number(mean_episodes / dn),
                       number(mean.alpha / dn), number(mean.gamma / dn), number(mean.lambda / dn),
                       number(mean.tau0 / dn), number(mean.tauk / dn), number(mean_beta / dn),
                       number(mean_score / dn)});
}

RunSummary drive(Checkpoint& state, const RunSettings& settings,
                 const EnvironmentFactory& factory, const fs::path& out_dir,
                 const RunControl& control, bool fresh) {
  fs::create_directories(out_dir / "checkpoints");
  Population& pop = state.population;
  Logs logs = open_logs(out_dir, settings, pop.instances.size());

  auto checkpoint = [&] {
    logs.flush();
    state.log_sizes = logs.sizes();
    save_checkpoint(state, checkpoint_path(out_dir, pop.generation));
  };
  if (fresh) checkpoint();

  bool halted = false;
  bool saved = true;
  while (pop.generation < settings.generations) {
    if (control.halt_after && pop.generation >= *control.halt_after) {
      halted = true;
      break;
    }
    auto records = evaluate_generation(pop, factory, state.seed, settings.workers);
    GenerationReport rep;
    if (state.mode == Mode::kOmpac) {
      for (const Instance& inst : pop.instances)
        if (inst.score < 0.0) {
          std::clog << "warning: negative score in generation " << pop.generation
                    << "; fitness shifted before selection\n";
          break;
        }
      Rng rng = make_rng(state.seed, {tag(StreamTag::kSelection), pop.generation});
      rep = step_generation(pop, rng);
    } else {
      rep = hold_generation(pop);
    }
    if (rep.uniform_fallback && state.mode == Mode::kOmpac) {
      ++state.uniform_fallbacks;
      std::clog << "warning: all scores zero in generation " << rep.generation
                << "; parents drawn uniformly\n";
    }
    for (char f : rep.failed) state.failures += f ? 1 : 0;

    write_generation(logs, rep, records, state.lineage, pop.config.episodes_per_generation);
    state.score_history.push_back(rep.scores);
    for (std::size_t k = 0; k < rep.parents.size(); ++k)
      state.lineage[k] = static_cast<std::int64_t>(rep.parents[k]);
    logs.flush();

    saved = false;
    const bool periodic = settings.checkpoint_interval > 0 &&
                          pop.generation % settings.checkpoint_interval == 0;
    if (periodic || pop.generation == settings.generations) {
      checkpoint();
      saved = true;
    }
  }
  if (!saved) checkpoint();

  RunSummary summary = summarize(state, settings, halted);
  std::ofstream out(out_dir / kSummaryJson, std::ios::binary | std::ios::trunc);
  out << nlohmann::json(summary).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (out_dir / kSummaryJson).string());
  return summary;
}

}  // namespace

RunSummary run(const RunSettings& settings, const EnvironmentFactory& factory,
               const fs::path& out_dir, const nlohmann::json& config_snapshot,
               const RunControl& control) {
  fs::create_directories(out_dir);
  for (std::string_view name : {kEpisodesCsv, kGenerationsCsv, kMetaparamsCsv}) {
    if (fs::exists(out_dir / name))
      throw std::runtime_error("output directory " + out_dir.string() +
                               " already holds a run; use resume or pick another directory");
  }
  Checkpoint state;
  state.config = config_snapshot;
  state.mode = settings.mode;
  state.seed = settings.seed;
  state.population = make_population(settings.population, settings.start, settings.network,
                                     learner_dims(factory), settings.seed,
                                     settings.mode == Mode::kOmpac);
  state.lineage.assign(settings.population.size, -1);
  return drive(state, settings, factory, out_dir, control, true);
}

RunSummary resume(const Checkpoint& checkpoint, const RunSettings& settings,
                  const EnvironmentFactory& factory, const fs::path& out_dir,
                  const RunControl& control) {
  for (const auto& [name, size] : checkpoint.log_sizes) {
    const fs::path p = out_dir / name;
    if (!fs::exists(p) || fs::file_size(p) < size)
      throw std::runtime_error("log " + p.string() + " is missing or shorter than the checkpoint");
    fs::resize_file(p, size);
  }
  Checkpoint state = checkpoint;
  return drive(state, settings, factory, out_dir, control, false);
}

}  // namespace ompac
