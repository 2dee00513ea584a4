// Acceptance checks. Prints one line per criterion and exits nonzero if any fails.
//   acceptance [--workdir DIR] [--long] [--only AC4,AC9]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ompac/harness.hpp"
#include "support.hpp"

using namespace ompac;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kSkip, kNotApplicable };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

const char* label(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "PASS";
    case Verdict::kFail: return "FAIL";
    case Verdict::kSkip: return "SKIP";
    case Verdict::kNotApplicable: return "N/A ";
  }
  return "?";
}

Outcome verdict(bool ok, const std::string& detail) {
  return {ok ? Verdict::kPass : Verdict::kFail, detail};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Context {
  fs::path workdir;
  bool long_run = false;
};

// ---------------------------------------------------------------------------

Outcome ac1(const Context&) {
  return {Verdict::kNotApplicable,
          "full-length score reproduction is out of scope; covered by the scaled checks below"};
}

Outcome ac2(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  std::size_t nets = 0;
  for (const Activation act : {Activation::kSiL, Activation::kDSiL}) {
    for (int i = 0; i < 25; ++i, ++nets) {
      const std::size_t in = 1 + uniform_index(rng, 20);
      const std::size_t hid = 1 + uniform_index(rng, 10);
      const std::size_t out = 1 + uniform_index(rng, 3);
      const Network net = Network::random(in, hid, out, act, rng);
      std::vector<double> s(in);
      for (double& x : s) x = 4.0 * uniform01(rng) - 2.0;
      worst = std::max(worst, testing::gradient_check(net, s));
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-6 && secs < 10.0,
                 fmt("%zu nets, max relative error %.2e (limit 1e-6), %.2f s", nets, worst, secs));
}

Outcome ac3(const Context&) {
  const double h = 1e-4;
  double worst = 0.0;
  double at = 0.0;
  for (int k = -20000; k <= 20000; ++k) {
    const double z = k * 1e-3;
    const double fd = (sil(z + h) - sil(z - h)) / (2 * h);
    const double err = std::abs(dsil(z) - fd);
    if (err > worst) {
      worst = err;
      at = z;
    }
  }
  return verdict(worst <= 1e-7,
                 fmt("40001 points on [-20, 20], max |dsil - d sil/dz| %.2e at z=%.3f (limit 1e-7)",
                     worst, at));
}

Outcome ac4(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  int walk_ok = 0, grid_ok = 0;
  std::size_t walk_worst = 0, grid_worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = testing::random_walk_run(seed, 5000, 0.05);
    if (w.first_below) {
      ++walk_ok;
      walk_worst = std::max(walk_worst, w.first_below);
    }
    const auto g = testing::gridworld_run(seed, 20000);
    if (g.first_optimal) {
      ++grid_ok;
      grid_worst = std::max(grid_worst, g.first_optimal);
    }
  }
  const double secs = seconds_since(t0);
  return verdict(walk_ok == 5 && grid_ok == 5 && secs < 120.0,
                 fmt("random walk RMS<=0.05 %d/5 (slowest %zu episodes), gridworld optimal %d/5 "
                     "(slowest %zu episodes), %.1f s",
                     walk_ok, walk_worst, grid_ok, grid_worst, secs));
}

Outcome ac5(const Context&) {
  using namespace tetris;
  const auto t0 = std::chrono::steady_clock::now();
  const std::map<Piece, std::size_t> expected = {{Piece::kS, 17}, {Piece::kZ, 17}, {Piece::kO, 9},
                                                 {Piece::kI, 17}, {Piece::kJ, 34}, {Piece::kL, 34},
                                                 {Piece::kT, 34}};
  bool counts = true;
  for (const Board& b : {Board(10, 20), Board(10, 10)})
    for (const auto& [p, n] : expected) counts = counts && enumerate_actions(b, p).size() == n;

  // Boards built so that the best possible drop clears the maximum.
  const int z_cleared =
      drop(Board::from_rows({"..........", "..........", "..########", ".#########"}),
           {Piece::kZ, 1, 0})
          .cleared;
  std::vector<std::string> rows(10, "..........");
  for (int i = 6; i < 10; ++i) rows[static_cast<std::size_t>(i)] = "#########.";
  const int i_cleared = drop(Board::from_rows(rows), {Piece::kI, 1, 9}).cleared;

  const auto sz = testing::random_drops(Variant::kSZ, 10, 20, 1'000'000, 5);
  const auto std10 = testing::random_drops(Variant::kStandard, 10, 10, 1'000'000, 6);
  const double secs = seconds_since(t0);
  const bool ok = counts && z_cleared == 2 && i_cleared == 4 && sz.max_cleared <= 2 &&
                  std10.max_cleared <= 4 && sz.conservation_failures == 0 &&
                  std10.conservation_failures == 0 && secs < 60.0;
  return verdict(ok, fmt("action counts %s; max clears SZ %d (random %d), 10x10 %d (random %d); "
                         "conservation failures %zu/%zu and %zu/%zu; %.1f s",
                         counts ? "exact" : "WRONG", z_cleared, sz.max_cleared, i_cleared,
                         std10.max_cleared, sz.conservation_failures, sz.drops,
                         std10.conservation_failures, std10.drops, secs));
}

Outcome ac6(const Context&) {
  using namespace tetris;
  bool ok = true;
  std::string detail;
  for (const auto& [name, cfg, variant] :
       {std::tuple{"SZ", TetrisConfig::sz_tetris(), Variant::kSZ},
        std::tuple{"10x10", TetrisConfig::tetris10(), Variant::kStandard}}) {
    Rng rng(99);
    Board board(cfg.width, cfg.height);
    std::size_t boards = 0, bad_bits = 0, bad_len = 0;
    while (boards < 20000) {
      const auto f = encode_features(board, cfg.encoding);
      ++boards;
      if (f.size() != cfg.encoding.size()) ++bad_len;
      std::size_t bits = 0;
      for (double x : f) bits += x != 0.0;
      if (bits != 20) ++bad_bits;
      const auto acts = enumerate_actions(board, sample_piece(variant, rng));
      const auto r = drop(board, acts[uniform_index(rng, acts.size())]);
      board = r.terminal ? Board(cfg.width, cfg.height) : r.board;
    }
    const std::size_t want = std::string(name) == "SZ" ? 460 : 260;
    ok = ok && cfg.encoding.size() == want && bad_bits == 0 && bad_len == 0;
    detail += fmt("%s%s length %zu (want %zu), %zu boards with bits != 20", detail.empty() ? "" : "; ", name,
                  cfg.encoding.size(), want, bad_bits);
  }
  return verdict(ok, detail);
}

Outcome ac7(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto st = testing::sus_statistics(100'000, 7);
  const double secs = seconds_since(t0);
  return verdict(st.counts_in_bounds && st.worst_z <= 3.0 && secs < 10.0,
                 fmt("counts within floor/ceil: %s; means %.4f %.4f %.4f %.4f vs 1.6 1.2 0.8 0.4; "
                     "worst %.2f standard errors; %.2f s",
                     st.counts_in_bounds ? "yes" : "no", st.mean[0], st.mean[1], st.mean[2],
                     st.mean[3], st.worst_z, secs));
}

Outcome ac8(const Context&) {
  testing::ScriptedTask env;
  LearnerState ls(testing::scripted_network(), testing::scripted_psi());
  Rng rng(17);
  sarsa_lambda_episode(ls, env, rng);
  bool actions = env.actions.size() == testing::kScriptedActions.size();
  for (std::size_t t = 0; actions && t < env.actions.size(); ++t)
    actions = env.actions[t] == testing::kScriptedActions[t];
  double worst = 0.0;
  for (std::size_t k = 0; k < testing::kScriptedTheta.size(); ++k)
    worst = std::max(worst, std::abs(ls.net.parameters()[k] - testing::kScriptedTheta[k]));
  return verdict(actions && worst <= 1e-12,
                 fmt("6 transitions, actions %s, max |theta - oracle| %.2e (limit 1e-12)",
                     actions ? "match" : "DIFFER", worst));
}

json smoke_config(const fs::path& dir) {
  return {{"environment", "sz-tetris"},
          {"seed", 42},
          {"population_size", 4},
          {"generations", 10},
          {"episodes_per_generation", 20},
          {"checkpoint_interval", 5},
          {"output_dir", dir.string()}};
}

Outcome ac9(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = ctx.workdir / "ac9";
  fs::remove_all(root);
  harness::run_experiment(harness::parse_run_config(smoke_config(root / "first")));
  harness::run_experiment(harness::parse_run_config(smoke_config(root / "second")));
  RunControl halt;
  halt.halt_after = 5;
  harness::run_experiment(harness::parse_run_config(smoke_config(root / "resumed")), halt);
  const auto cp = latest_checkpoint(root / "resumed");
  if (!cp) return verdict(false, "no checkpoint after halting");
  harness::resume_experiment(*cp);

  std::vector<std::string> mismatches;
  std::size_t bytes = 0;
  for (const auto f : {kEpisodesCsv, kGenerationsCsv, kMetaparamsCsv}) {
    const std::string a = testing::slurp(root / "first" / f);
    bytes += a.size();
    if (a.empty() || a != testing::slurp(root / "second" / f))
      mismatches.push_back(std::string(f) + " (repeat)");
    if (a != testing::slurp(root / "resumed" / f)) mismatches.push_back(std::string(f) + " (resume)");
  }
  const double secs = seconds_since(t0);
  std::string detail = fmt("3 CSVs, %zu bytes, halted at %s; ", bytes, cp->filename().c_str());
  if (mismatches.empty()) detail += "repeat and resume byte-identical";
  for (const auto& m : mismatches) detail += "mismatch " + m + "; ";
  detail += fmt("; %.1f s", secs);
  return verdict(mismatches.empty() && secs < 300.0, detail);
}

Outcome ac10(const Context& ctx) {
  if (!ctx.long_run) return {Verdict::kSkip, "long trend check; run with --long"};
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = ctx.workdir / "ac10";
  fs::remove_all(root);
  json base = {{"environment", "sz-tetris"},
               {"seed", 10},
               {"generations", 300},
               {"episodes_per_generation", 100},
               {"start", {{"gamma", 0.8}, {"tauk", 2.5e-5}}},
               {"log_episodes", false}};
  json ompac = base;
  ompac["population_size"] = 12;
  ompac["output_dir"] = (root / "ompac").string();
  json fixed = base;
  fixed["mode"] = "baseline";
  fixed["population_size"] = 10;
  fixed["output_dir"] = (root / "baseline").string();
  harness::run_experiment(harness::parse_run_config(ompac));
  harness::run_experiment(harness::parse_run_config(fixed));
  const auto a = harness::load_json_file(root / "ompac" / kSummaryJson).get<RunSummary>();
  const auto b = harness::load_json_file(root / "baseline" / kSummaryJson).get<RunSummary>();
  const double ratio = b.final_mean_score > 0 ? a.final_mean_score / b.final_mean_score
                                              : (a.final_mean_score > 0 ? INFINITY : 0.0);
  const double secs = seconds_since(t0);
  return verdict(ratio >= 2.0,
                 fmt("final mean score OMPAC %.2f vs baseline %.2f (ratio %.2f, need >= 2); final "
                     "mean gamma %.3f; %.0f s",
                     a.final_mean_score, b.final_mean_score, ratio, a.mean_psi.gamma, secs));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  Context ctx;
  std::string workdir = (fs::temp_directory_path() / "ompac_acceptance").string();
  std::string only;
  app.add_option("--workdir", workdir, "scratch directory for run artifacts");
  app.add_flag("--long", ctx.long_run, "include the long trend check");
  app.add_option("--only", only, "comma-separated subset, e.g. AC4,AC9");
  CLI11_PARSE(app, argc, argv);
  ctx.workdir = workdir;
  fs::create_directories(ctx.workdir);

  std::set<std::string> selected;
  std::stringstream ss(only);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) selected.insert(item);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> checks = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}};

  int failures = 0;
  for (const auto& [id, check] : checks) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = check(ctx);
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    if (o.verdict == Verdict::kFail) ++failures;
    std::cout << label(o.verdict) << "  " << id << (id.size() < 4 ? " " : "") << "  " << o.detail
              << std::endl;
  }
  return failures ? 1 : 0;
}
