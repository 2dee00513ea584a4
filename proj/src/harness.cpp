#include "ompac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "ompac/csv.hpp"

namespace ompac::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

std::string_view to_string(EnvironmentKind k) noexcept {
  switch (k) {
    case EnvironmentKind::kSZTetris: return "sz-tetris";
    case EnvironmentKind::kTetris10: return "tetris-10x10";
    case EnvironmentKind::kChain: return "chain";
    case EnvironmentKind::kGridWorld: return "gridworld";
  }
  return "?";
}

EnvironmentKind environment_from_string(std::string_view name) {
  for (auto k : {EnvironmentKind::kSZTetris, EnvironmentKind::kTetris10, EnvironmentKind::kChain,
                 EnvironmentKind::kGridWorld})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

json default_config(EnvironmentKind env) {
  json j = {{"mode", "ompac"},
            {"environment", to_string(env)},
            {"seed", 1},
            {"population_size", 12},
            {"episodes_per_generation", 100},
            {"start", MetaParams{}},
            {"noise", NoiseConfig{}},
            {"network", {{"hidden", 50}, {"activation", "dsil"}}},
            {"checkpoint_interval", 100},
            {"summary_window", 1000},
            {"workers", 0},
            {"log_episodes", true},
            {"output_dir", ""}};
  switch (env) {
    case EnvironmentKind::kSZTetris: {
      const auto t = tetris::TetrisConfig::sz_tetris();
      j["generations"] = 2000;
      j["tetris"] = {{"height", t.height},
                     {"z", t.z},
                     {"encoding",
                      {{"max_height", t.encoding.max_height},
                       {"diff_clip", t.encoding.diff_clip},
                       {"hole_cap", t.encoding.hole_cap}}}};
      break;
    }
    case EnvironmentKind::kTetris10: {
      const auto t = tetris::TetrisConfig::tetris10();
      j["generations"] = 2500;
      j["network"]["hidden"] = 250;
      j["summary_window"] = 10000;
      j["tetris"] = {{"height", t.height},
                     {"z", t.z},
                     {"encoding",
                      {{"max_height", t.encoding.max_height},
                       {"diff_clip", t.encoding.diff_clip},
                       {"hole_cap", t.encoding.hole_cap}}}};
      break;
    }
    case EnvironmentKind::kChain: {
      const auto c = ChainConfig::random_walk();
      j["generations"] = 50;
      j["network"]["hidden"] = 0;
      j["start"] = MetaParams{0.002, 1.0, 0.8, 1.0, 0.0};
      j["chain"] = {{"states", c.states},
                    {"start", c.start},
                    {"p_right", c.p_right},
                    {"left_reward", c.left_reward},
                    {"right_reward", c.right_reward},
                    {"step_rewards", c.step_rewards}};
      break;
    }
    case EnvironmentKind::kGridWorld: {
      const GridWorldConfig g;
      j["generations"] = 50;
      j["network"]["hidden"] = 0;
      j["start"] = MetaParams{0.1, 0.9, 0.5, 0.5, 0.001};
      j["gridworld"] = {{"rows", g.rows},         {"cols", g.cols},
                        {"goal_row", g.goal_row}, {"goal_col", g.goal_col},
                        {"goal_reward", g.goal_reward}, {"step_reward", g.step_reward}};
      break;
    }
  }
  return j;
}

namespace {

// Collects validation problems while reading typed fields out of a JSON tree.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  template <typename T>
  T get(const json& obj, const std::string& path, const std::string& key, T fallback) {
    const std::string name = path.empty() ? key : path + "." + key;
    if (!obj.contains(key)) {
      problems_.push_back(name + ": missing");
      return fallback;
    }
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!obj.at(key).is_number_integer() || obj.at(key).get<std::int64_t>() < 0) {
          problems_.push_back(name + ": expected a non-negative integer");
          return fallback;
        }
      }
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(name + ": wrong type");
      return fallback;
    }
  }

  void require(bool ok, const std::string& message) {
    if (!ok) problems_.push_back(message);
  }

  void known_keys(const json& obj, const std::string& path, const std::set<std::string>& keys) {
    if (!obj.is_object()) {
      problems_.push_back((path.empty() ? std::string("config") : path) + ": expected an object");
      return;
    }
    for (const auto& [k, v] : obj.items())
      if (!keys.contains(k)) problems_.push_back((path.empty() ? k : path + "." + k) + ": unknown field");
  }

 private:
  std::vector<std::string>& problems_;
};

}  // namespace

RunConfig parse_run_config(const json& input, const json& overrides) {
  std::vector<std::string> problems;
  if (!input.is_object()) throw ConfigError({"config: expected a JSON object"});

  json user = input;
  if (overrides.is_object()) user.merge_patch(overrides);

  EnvironmentKind env = EnvironmentKind::kSZTetris;
  if (user.contains("environment")) {
    try {
      env = environment_from_string(user.at("environment").get<std::string>());
    } catch (const std::exception&) {
      throw ConfigError({"environment: expected one of sz-tetris, tetris-10x10, chain, gridworld"});
    }
  }
  json j = default_config(env);
  j.merge_patch(user);

  Reader r(problems);
  std::set<std::string> top = {"mode", "environment", "seed", "population_size", "generations",
                               "episodes_per_generation", "start", "noise", "network",
                               "checkpoint_interval", "summary_window", "workers",
                               "log_episodes", "output_dir"};
  if (env == EnvironmentKind::kSZTetris || env == EnvironmentKind::kTetris10) top.insert("tetris");
  if (env == EnvironmentKind::kChain) top.insert("chain");
  if (env == EnvironmentKind::kGridWorld) top.insert("gridworld");
  r.known_keys(j, "", top);

  RunConfig cfg;
  cfg.environment = env;
  RunSettings& s = cfg.settings;

  const auto mode = r.get<std::string>(j, "", "mode", "ompac");
  if (mode == "ompac" || mode == "baseline")
    s.mode = mode_from_string(mode);
  else
    problems.push_back("mode: expected ompac or baseline");

  s.seed = r.get<std::uint64_t>(j, "", "seed", 1);
  s.population.size = r.get<std::size_t>(j, "", "population_size", 12);
  r.require(s.population.size >= 1, "population_size: must be at least 1");
  s.generations = r.get<std::uint64_t>(j, "", "generations", 0);
  s.population.episodes_per_generation = r.get<std::size_t>(j, "", "episodes_per_generation", 100);
  s.checkpoint_interval = r.get<std::uint64_t>(j, "", "checkpoint_interval", 100);
  s.summary_window = r.get<std::uint64_t>(j, "", "summary_window", 1000);
  r.require(s.summary_window >= 1, "summary_window: must be at least 1");
  s.workers = r.get<std::size_t>(j, "", "workers", 0);
  s.log_episodes = r.get<bool>(j, "", "log_episodes", true);
  cfg.output_dir = r.get<std::string>(j, "", "output_dir", "");

  if (j.contains("start")) {
    const json& st = j.at("start");
    r.known_keys(st, "start", {"alpha", "gamma", "lambda", "tau0", "tauk"});
    for (std::size_t f = 0; f < MetaParams::kFieldCount; ++f) {
      const std::string key(MetaParams::kFieldNames[f]);
      s.start.field(f) = r.get<double>(st, "start", key, s.start.field(f));
    }
    r.require(s.start.alpha > 0.0 && s.start.alpha <= 1.0, "start.alpha: must be in (0, 1]");
    r.require(s.start.gamma >= 0.0 && s.start.gamma <= 1.0, "start.gamma: must be in [0, 1]");
    r.require(s.start.lambda >= 0.0 && s.start.lambda <= 1.0, "start.lambda: must be in [0, 1]");
    r.require(s.start.tau0 > 0.0, "start.tau0: must be positive");
    r.require(s.start.tauk >= 0.0, "start.tauk: must be non-negative");
  }
  if (j.contains("noise")) {
    const json& nz = j.at("noise");
    r.known_keys(nz, "noise", {"p_n", "eta_n"});
    s.population.noise.p_n = r.get<double>(nz, "noise", "p_n", 0.1);
    s.population.noise.eta_n = r.get<double>(nz, "noise", "eta_n", 0.05);
    r.require(s.population.noise.p_n >= 0.0 && s.population.noise.p_n <= 1.0,
              "noise.p_n: must be in [0, 1]");
    r.require(s.population.noise.eta_n >= 0.0, "noise.eta_n: must be non-negative");
  }
  if (j.contains("network")) {
    const json& nw = j.at("network");
    r.known_keys(nw, "network", {"hidden", "activation"});
    s.network.hidden = r.get<std::size_t>(nw, "network", "hidden", 50);
    const auto act = r.get<std::string>(nw, "network", "activation", "dsil");
    try {
      s.network.activation = activation_from_string(act);
    } catch (const std::exception&) {
      problems.push_back("network.activation: expected sil or dsil");
    }
  }

  if (env == EnvironmentKind::kSZTetris || env == EnvironmentKind::kTetris10) {
    cfg.tetris = env == EnvironmentKind::kSZTetris ? tetris::TetrisConfig::sz_tetris()
                                                   : tetris::TetrisConfig::tetris10();
    const json& t = j.at("tetris");
    r.known_keys(t, "tetris", {"height", "z", "encoding"});
    cfg.tetris.height = r.get<int>(t, "tetris", "height", cfg.tetris.height);
    cfg.tetris.z = r.get<double>(t, "tetris", "z", cfg.tetris.z);
    r.require(cfg.tetris.height >= 4, "tetris.height: must be at least 4");
    r.require(cfg.tetris.z > 0.0, "tetris.z: must be positive");
    if (t.contains("encoding")) {
      const json& e = t.at("encoding");
      r.known_keys(e, "tetris.encoding", {"max_height", "diff_clip", "hole_cap"});
      auto& enc = cfg.tetris.encoding;
      enc.max_height = r.get<int>(e, "tetris.encoding", "max_height", enc.max_height);
      enc.diff_clip = r.get<int>(e, "tetris.encoding", "diff_clip", enc.diff_clip);
      enc.hole_cap = r.get<int>(e, "tetris.encoding", "hole_cap", enc.hole_cap);
      r.require(enc.max_height == cfg.tetris.height,
                "tetris.encoding.max_height: must equal tetris.height");
      r.require(enc.diff_clip >= 0, "tetris.encoding.diff_clip: must be non-negative");
      r.require(enc.hole_cap >= 0, "tetris.encoding.hole_cap: must be non-negative");
    }
  }
  if (env == EnvironmentKind::kChain) {
    const json& c = j.at("chain");
    r.known_keys(c, "chain",
                 {"states", "start", "p_right", "left_reward", "right_reward", "step_rewards"});
    auto& ch = cfg.chain;
    ch.states = r.get<std::size_t>(c, "chain", "states", ch.states);
    ch.start = r.get<std::size_t>(c, "chain", "start", ch.start);
    ch.p_right = r.get<double>(c, "chain", "p_right", ch.p_right);
    ch.left_reward = r.get<double>(c, "chain", "left_reward", ch.left_reward);
    ch.right_reward = r.get<double>(c, "chain", "right_reward", ch.right_reward);
    ch.step_rewards = r.get<std::vector<double>>(c, "chain", "step_rewards", {});
    r.require(ch.states >= 1, "chain.states: must be at least 1");
    r.require(ch.start < ch.states, "chain.start: must be below chain.states");
    r.require(ch.p_right >= 0.0 && ch.p_right <= 1.0, "chain.p_right: must be in [0, 1]");
    r.require(ch.step_rewards.empty() || ch.step_rewards.size() == ch.states,
              "chain.step_rewards: needs one entry per state");
  }
  if (env == EnvironmentKind::kGridWorld) {
    const json& g = j.at("gridworld");
    r.known_keys(g, "gridworld",
                 {"rows", "cols", "goal_row", "goal_col", "goal_reward", "step_reward"});
    auto& gw = cfg.gridworld;
    gw.rows = r.get<int>(g, "gridworld", "rows", gw.rows);
    gw.cols = r.get<int>(g, "gridworld", "cols", gw.cols);
    gw.goal_row = r.get<int>(g, "gridworld", "goal_row", gw.goal_row);
    gw.goal_col = r.get<int>(g, "gridworld", "goal_col", gw.goal_col);
    gw.goal_reward = r.get<double>(g, "gridworld", "goal_reward", gw.goal_reward);
    gw.step_reward = r.get<double>(g, "gridworld", "step_reward", gw.step_reward);
    r.require(gw.rows >= 1 && gw.cols >= 1 && gw.rows * gw.cols >= 2,
              "gridworld: needs at least two cells");
    r.require(gw.goal_row >= 0 && gw.goal_row < gw.rows && gw.goal_col >= 0 &&
                  gw.goal_col < gw.cols,
              "gridworld.goal_row/goal_col: goal outside the grid");
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));

  if (cfg.output_dir.empty()) {
    const char* root = std::getenv(kOutputRootEnv);
    fs::path base = root && *root ? fs::path(root) : fs::path("runs");
    cfg.output_dir = base / (std::string(to_string(env)) + "_" + std::string(to_string(s.mode)) +
                             "_seed" + std::to_string(s.seed));
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const RunSettings& s = cfg.settings;
  json j = {{"mode", to_string(s.mode)},
            {"environment", to_string(cfg.environment)},
            {"seed", s.seed},
            {"population_size", s.population.size},
            {"generations", s.generations},
            {"episodes_per_generation", s.population.episodes_per_generation},
            {"start", s.start},
            {"noise", s.population.noise},
            {"network", {{"hidden", s.network.hidden}, {"activation", to_string(s.network.activation)}}},
            {"checkpoint_interval", s.checkpoint_interval},
            {"summary_window", s.summary_window},
            {"workers", s.workers},
            {"log_episodes", s.log_episodes},
            {"output_dir", cfg.output_dir.string()}};
  switch (cfg.environment) {
    case EnvironmentKind::kSZTetris:
    case EnvironmentKind::kTetris10:
      j["tetris"] = {{"height", cfg.tetris.height},
                     {"z", cfg.tetris.z},
                     {"encoding",
                      {{"max_height", cfg.tetris.encoding.max_height},
                       {"diff_clip", cfg.tetris.encoding.diff_clip},
                       {"hole_cap", cfg.tetris.encoding.hole_cap}}}};
      break;
    case EnvironmentKind::kChain:
      j["chain"] = {{"states", cfg.chain.states},
                    {"start", cfg.chain.start},
                    {"p_right", cfg.chain.p_right},
                    {"left_reward", cfg.chain.left_reward},
                    {"right_reward", cfg.chain.right_reward},
                    {"step_rewards", cfg.chain.step_rewards}};
      break;
    case EnvironmentKind::kGridWorld:
      j["gridworld"] = {{"rows", cfg.gridworld.rows},
                        {"cols", cfg.gridworld.cols},
                        {"goal_row", cfg.gridworld.goal_row},
                        {"goal_col", cfg.gridworld.goal_col},
                        {"goal_reward", cfg.gridworld.goal_reward},
                        {"step_reward", cfg.gridworld.step_reward}};
      break;
  }
  return j;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open"});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
}

EnvironmentFactory make_environment_factory(const RunConfig& cfg) {
  switch (cfg.environment) {
    case EnvironmentKind::kSZTetris:
    case EnvironmentKind::kTetris10: {
      tetris::TetrisConfig t = cfg.tetris;
      t.width = t.encoding.width;
      return [t]() -> EnvironmentHandle {
        return std::make_unique<tetris::TetrisEnvironment>(t);
      };
    }
    case EnvironmentKind::kChain: {
      ChainConfig c = cfg.chain;
      return [c]() -> EnvironmentHandle { return std::make_unique<ChainEnvironment>(c); };
    }
    case EnvironmentKind::kGridWorld: {
      GridWorldConfig g = cfg.gridworld;
      return [g]() -> EnvironmentHandle { return std::make_unique<GridWorld>(g); };
    }
  }
  throw std::logic_error("unhandled environment kind");
}

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

fs::path run_experiment(const RunConfig& cfg, const RunControl& control) {
  if (fs::exists(cfg.output_dir / kGenerationsCsv) || fs::exists(cfg.output_dir / kEpisodesCsv))
    throw std::runtime_error("output directory " + cfg.output_dir.string() +
                             " already holds a run; use resume or pick another directory");
  fs::create_directories(cfg.output_dir);
  const json snapshot = to_json(cfg);
  write_json(cfg.output_dir / "config.json", snapshot);
  run(cfg.settings, make_environment_factory(cfg), cfg.output_dir, snapshot, control);
  return cfg.output_dir;
}

fs::path resume_experiment(const fs::path& checkpoint_file,
                           std::optional<std::uint64_t> generations, const RunControl& control) {
  const Checkpoint cp = load_checkpoint(checkpoint_file);
  json overrides = json::object();
  if (generations) overrides["generations"] = *generations;
  RunConfig cfg = parse_run_config(cp.config, overrides);
  // The artifact directory is the one that holds checkpoints/.
  const fs::path dir = fs::absolute(checkpoint_file).parent_path().parent_path();
  cfg.output_dir = dir;
  resume(cp, cfg.settings, make_environment_factory(cfg), dir, control);
  return dir;
}

SweepConfig parse_sweep_config(const json& j) {
  std::vector<std::string> problems;
  SweepConfig s;
  if (!j.is_object()) throw ConfigError({"sweep: expected a JSON object"});
  for (const auto& [k, v] : j.items())
    if (k != "base" && k != "grid" && k != "modes" && k != "output_dir" && k != "workers")
      problems.push_back("sweep." + k + ": unknown field");
  s.base = j.value("base", json::object());
  if (!s.base.is_object()) problems.push_back("sweep.base: expected an object");

  if (!j.contains("grid") || !j.at("grid").is_object() || j.at("grid").empty()) {
    problems.push_back("sweep.grid: expected a non-empty object of value lists");
  } else {
    for (const auto& [k, v] : j.at("grid").items()) {
      const bool known = std::find(MetaParams::kFieldNames.begin(), MetaParams::kFieldNames.end(),
                                   k) != MetaParams::kFieldNames.end();
      if (!known) {
        problems.push_back("sweep.grid." + k + ": not a meta-parameter");
        continue;
      }
      if (!v.is_array() || v.empty()) {
        problems.push_back("sweep.grid." + k + ": expected a non-empty list of numbers");
        continue;
      }
      try {
        s.grid[k] = v.get<std::vector<double>>();
      } catch (const json::exception&) {
        problems.push_back("sweep.grid." + k + ": expected numbers");
      }
    }
  }
  if (j.contains("modes")) {
    s.modes.clear();
    try {
      for (const auto& m : j.at("modes")) s.modes.push_back(mode_from_string(m.get<std::string>()));
    } catch (const std::exception&) {
      problems.push_back("sweep.modes: expected a list of ompac/baseline");
    }
    if (s.modes.empty()) problems.push_back("sweep.modes: must not be empty");
  }
  s.output_dir = j.value("output_dir", std::string());
  if (s.output_dir.empty()) {
    const char* root = std::getenv(kOutputRootEnv);
    s.output_dir = (root && *root ? fs::path(root) : fs::path("runs")) / "sweep";
  }
  try {
    s.workers = j.value("workers", std::size_t{1});
  } catch (const json::exception&) {
    problems.push_back("sweep.workers: expected a non-negative integer");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return s;
}

namespace {

std::string cell_name(const std::map<std::string, double>& values, Mode mode) {
  std::string name;
  for (const auto& [k, v] : values) name += k + "-" + csv::number(v) + "_";
  return name + std::string(to_string(mode));
}

}  // namespace

std::vector<SweepCell> run_sweep(const SweepConfig& sweep) {
  std::vector<SweepCell> cells;
  // Cartesian product, first grid key varying slowest.
  std::vector<std::map<std::string, double>> points = {{}};
  for (const auto& [k, values] : sweep.grid) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points)
      for (double v : values) {
        auto q = p;
        q[k] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  for (const auto& p : points)
    for (Mode m : sweep.modes) {
      SweepCell c;
      c.values = p;
      c.mode = m;
      c.dir = sweep.output_dir / cell_name(p, m);
      cells.push_back(std::move(c));
    }

  // Validate every cell before running any of them.
  std::vector<RunConfig> configs;
  for (const SweepCell& c : cells) {
    json overrides = {{"mode", to_string(c.mode)}, {"output_dir", c.dir.string()}};
    for (const auto& [k, v] : c.values) overrides["start"][k] = v;
    configs.push_back(parse_run_config(sweep.base, overrides));
  }

  fs::create_directories(sweep.output_dir);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepCell& c = cells[i];
      try {
        run_experiment(configs[i]);
        std::ifstream in(c.dir / kSummaryJson);
        const RunSummary summary = json::parse(in).get<RunSummary>();
        c.mean = summary.final_mean_score;
        c.stddev = summary.final_stddev;
        c.ok = true;
      } catch (const std::exception& e) {
        c.error = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(
      sweep.workers == 0 ? std::thread::hardware_concurrency() : sweep.workers, 1, cells.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::string header;
  for (const auto& [k, v] : sweep.grid) header += k + ",";
  header += "mode,mean,stddev,status";
  csv::Writer table(sweep.output_dir / kComparisonCsv, header);
  for (const SweepCell& c : cells) {
    std::ostringstream line;
    for (const auto& [k, v] : c.values) line << csv::number(v) << ',';
    line << to_string(c.mode) << ',' << (c.ok ? csv::number(c.mean) : "") << ','
         << (c.ok ? csv::number(c.stddev) : "") << ',' << (c.ok ? "ok" : "error");
    table.row({line.str()});
  }
  table.flush();
  return cells;
}

ExportResult export_curves(const fs::path& artifact_dir, std::size_t window,
                           std::optional<fs::path> dest) {
  if (window == 0) throw ArtifactError("export: window must be at least 1 generation");
  std::vector<std::string> missing;
  for (const char* f : {"config.json", "generations.csv"})
    if (!fs::exists(artifact_dir / f)) missing.push_back((artifact_dir / f).string());
  if (!missing.empty()) throw ArtifactError("export: missing artifacts: " + join(missing, ", "));

  const RunConfig cfg = parse_run_config(load_json_file(artifact_dir / "config.json"));
  const double eps = static_cast<double>(cfg.settings.population.episodes_per_generation);
  csv::Table gens;
  try {
    gens = csv::read(artifact_dir / "generations.csv");
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("export: ") + e.what());
  }

  struct Acc {
    double score = 0, n = 0;
    MetaParams psi{0, 0, 0, 0, 0};
    double beta = 0;
  };
  std::map<std::uint64_t, Acc> per_gen;
  const std::size_t c_gen = gens.column("generation"), c_score = gens.column("score");
  std::array<std::size_t, MetaParams::kFieldCount> c_psi{};
  for (std::size_t f = 0; f < MetaParams::kFieldCount; ++f)
    c_psi[f] = gens.column(std::string(MetaParams::kFieldNames[f]));
  for (const auto& row : gens.rows) {
    const std::uint64_t g = std::stoull(row[c_gen]);
    Acc& a = per_gen[g];
    a.score += eps > 0 ? std::stod(row[c_score]) / eps : 0.0;
    MetaParams psi;
    for (std::size_t f = 0; f < MetaParams::kFieldCount; ++f) {
      psi.field(f) = std::stod(row[c_psi[f]]);
      a.psi.field(f) += psi.field(f);
    }
    // Every instance has completed (g + 1) * eps episodes at the end of generation g.
    a.beta += inverse_temperature(psi, static_cast<std::uint64_t>((g + 1) * eps));
    a.n += 1;
  }

  const fs::path out_dir = dest.value_or(artifact_dir / "export");
  fs::create_directories(out_dir);
  ExportResult res{out_dir / "curve.csv", out_dir / "trajectory.csv", 0};
  if (fs::exists(res.curve)) fs::remove(res.curve);
  if (fs::exists(res.trajectory)) fs::remove(res.trajectory);

  csv::Writer traj(res.trajectory, "generation,episodes,alpha,gamma,lambda,tau0,tauk,beta");
  std::vector<std::pair<std::uint64_t, double>> means;
  for (const auto& [g, a] : per_gen) {
    means.emplace_back(g, a.score / a.n);
    traj.row({csv::number(g), csv::number((static_cast<double>(g) + 1) * eps),
              csv::number(a.psi.alpha / a.n), csv::number(a.psi.gamma / a.n),
              csv::number(a.psi.lambda / a.n), csv::number(a.psi.tau0 / a.n),
              csv::number(a.psi.tauk / a.n), csv::number(a.beta / a.n)});
  }
  traj.flush();

  csv::Writer curve(res.curve, "point,first_generation,last_generation,episodes,mean_score");
  for (std::size_t start = 0; start < means.size(); start += window) {
    const std::size_t end = std::min(start + window, means.size());
    double sum = 0;
    for (std::size_t i = start; i < end; ++i) sum += means[i].second;
    const std::uint64_t last = means[end - 1].first;
    curve.row({csv::number(static_cast<std::uint64_t>(res.points)), csv::number(means[start].first),
               csv::number(last), csv::number((static_cast<double>(last) + 1) * eps),
               csv::number(sum / static_cast<double>(end - start))});
    ++res.points;
  }
  curve.flush();
  return res;
}

}  // namespace ompac::harness
