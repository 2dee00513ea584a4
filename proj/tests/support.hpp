// Shared fixtures and reference computations for the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ompac/diagnostic_envs.hpp"
#include "ompac/learner.hpp"
#include "ompac/neuralnet.hpp"
#include "ompac/population.hpp"
#include "ompac/random.hpp"
#include "ompac/tetris.hpp"

namespace ompac::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("OMPAC_TEST_TMP");
  std::filesystem::path base =
      root && *root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "ompac_tests";
  const auto dir = base / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Gradient check

// Max relative error between analytic and central-difference gradients of
// every output. Entries where both are below `floor` are compared absolutely.
inline double gradient_check(const Network& net, std::span<const double> s, double h = 1e-5,
                             double floor = 1e-7) {
  double worst = 0.0;
  Network probe = net;
  for (std::size_t o = 0; o < net.output_dim(); ++o) {
    const Gradient g = gradient(net, s, o);
    for (std::size_t k = 0; k < net.parameter_count(); ++k) {
      const double keep = probe.parameters()[k];
      probe.parameters()[k] = keep + h;
      const double up = evaluate(probe, s, o);
      probe.parameters()[k] = keep - h;
      const double down = evaluate(probe, s, o);
      probe.parameters()[k] = keep;
      const double fd = (up - down) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(g[k])});
      const double err = scale < floor ? std::abs(fd - g[k]) : std::abs(fd - g[k]) / scale;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Scripted six-transition task with two actions. The next state depends on the
// chosen action through feature 2, the reward through a 0.1 * action bonus.

struct ScriptedTask final : ActionEnvironment {
  static constexpr std::size_t kSteps = 6;
  static constexpr std::array<std::array<double, 3>, kSteps + 1> kBase = {{
      {1.0, 0.0, 0.0},
      {0.0, 1.0, 0.0},
      {1.0, 1.0, 0.0},
      {0.5, -1.0, 0.0},
      {-1.0, 0.5, 0.0},
      {0.0, 0.0, 0.0},
      {2.0, -0.5, 0.0},
  }};
  static constexpr std::array<double, kSteps> kReward = {0.0, 0.5, -0.25, 1.0, 0.0, 2.0};

  std::size_t t = 0;
  std::vector<double> s = std::vector<double>(3, 0.0);
  std::vector<std::size_t> actions;

  std::size_t feature_dim() const override { return 3; }
  std::size_t action_count() const override { return 2; }
  void reset(Rng&) override {
    t = 0;
    actions.clear();
    set(0, 0);
  }
  std::span<const double> state_features() const override { return s; }
  Transition step(std::size_t a, Rng&) override {
    actions.push_back(a);
    const double r = kReward[t] + 0.1 * static_cast<double>(a);
    ++t;
    set(t, a);
    return {r, r, t == kSteps};
  }

 private:
  void set(std::size_t step, std::size_t a) {
    std::copy(kBase[step].begin(), kBase[step].end(), s.begin());
    s[2] = static_cast<double>(a);
  }
};

// Starting parameters: w_in (3x2), b_hidden (2), w_out (2x2), b_out (2), dSiL units.
inline Network scripted_network() {
  Network net(3, 2, 2, Activation::kDSiL);
  const std::array<double, 14> theta = {0.30, -0.20, -0.10, 0.40, 0.25, 0.15, 0.05,
                                        -0.05, 0.50, -0.30, -0.40, 0.60, 0.01, 0.00};
  std::copy(theta.begin(), theta.end(), net.parameters().begin());
  return net;
}

// alpha 0.1, gamma 0.9, lambda 0.7; the temperature is low enough that the
// softmax is a strict argmax for this task.
inline MetaParams scripted_psi() { return {0.1, 0.9, 0.7, 1e-9, 0.0}; }

// Frozen output of tests/oracles/sarsa_replay.py (greedy actions 0,1,1,0,1,0).
inline constexpr std::array<double, 14> kScriptedTheta = {
    0.3331457490793176,   -0.23084269272242414, -0.16665055963081105, 0.49945356403516233,
    0.3213605990938823,   0.11986089868955867,  0.11217209928041719,  -0.034254929460296964,
    0.7767801595520781,   -0.15246394152569162, -0.23613700981858446, 0.7931228780448775,
    0.4017222142183933,   0.28714942703137886};
inline constexpr std::array<std::size_t, 6> kScriptedActions = {0, 1, 1, 0, 1, 0};

// Step-by-step Sarsa(lambda) written out with explicit loops and its own
// softmax draw, for arbitrary temperatures. Returns the final parameters.
inline std::vector<double> sarsa_oracle(const Network& start, const MetaParams& psi, Rng& rng,
                                        std::vector<std::size_t>* actions = nullptr) {
  const std::size_t in = 3, hid = 2, out = 2;
  std::vector<double> th(start.parameters().begin(), start.parameters().end());
  auto sg = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto act = [&](double z) { return sg(z) * (1.0 + z * (1.0 - sg(z))); };
  auto act_d = [&](double z) {
    const double q = sg(z);
    return q * (1.0 - q) * (2.0 + z * (1.0 - q) - z * q);
  };
  auto q_of = [&](const std::vector<double>& s, std::size_t a) {
    double v = th[12 + a];
    for (std::size_t j = 0; j < hid; ++j) {
      double z = th[6 + j];
      for (std::size_t i = 0; i < in; ++i) z += s[i] * th[i * hid + j];
      v += act(z) * th[8 + j * out + a];
    }
    return v;
  };
  auto grad_of = [&](const std::vector<double>& s, std::size_t a) {
    std::vector<double> g(14, 0.0);
    for (std::size_t j = 0; j < hid; ++j) {
      double z = th[6 + j];
      for (std::size_t i = 0; i < in; ++i) z += s[i] * th[i * hid + j];
      g[8 + j * out + a] = act(z);
      const double back = th[8 + j * out + a] * act_d(z);
      g[6 + j] = back;
      for (std::size_t i = 0; i < in; ++i) g[i * hid + j] = s[i] * back;
    }
    g[12 + a] = 1.0;
    return g;
  };
  const double tau = psi.tau0 / (1.0 + psi.tauk * 0.0);
  auto pick = [&](const std::vector<double>& s) {
    const double q0 = q_of(s, 0), q1 = q_of(s, 1);
    const double m = std::max(q0, q1);
    const double w0 = std::exp((q0 - m) / tau), w1 = std::exp((q1 - m) / tau);
    const double u = uniform01(rng);
    return u * (w0 + w1) < w0 ? std::size_t{0} : std::size_t{1};
  };

  ScriptedTask env;
  env.reset(rng);
  std::vector<double> s(env.state_features().begin(), env.state_features().end());
  std::size_t a = pick(s);
  std::vector<double> e(14, 0.0);
  if (actions) actions->assign(1, a);
  for (;;) {
    const Transition tr = env.step(a, rng);
    std::vector<double> s2(env.state_features().begin(), env.state_features().end());
    const std::vector<double> g = grad_of(s, a);
    for (std::size_t k = 0; k < 14; ++k) e[k] = psi.gamma * psi.lambda * e[k] + g[k];
    double delta;
    if (tr.terminal) {
      delta = tr.reward - q_of(s, a);
    } else {
      const std::size_t a2 = pick(s2);
      delta = tr.reward + psi.gamma * q_of(s2, a2) - q_of(s, a);
      a = a2;
      if (actions) actions->push_back(a);
    }
    for (std::size_t k = 0; k < 14; ++k) th[k] += psi.alpha * delta * e[k];
    s = s2;
    if (tr.terminal) break;
  }
  return th;
}

// ---------------------------------------------------------------------------
// Random walk and gridworld references

// Exact state values of the chain under its random policy (gamma 1), by
// solving the linear system with Gauss-Seidel sweeps to convergence.
inline std::vector<double> chain_values(const ChainConfig& c) {
  std::vector<double> v(c.states, 0.0);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < c.states; ++i) {
      const double r = c.step_rewards.empty() ? 0.0 : c.step_rewards[i];
      const double left = i == 0 ? c.left_reward : r + v[i - 1];
      const double right = i + 1 == c.states ? c.right_reward : r + v[i + 1];
      const double nv = (1.0 - c.p_right) * left + c.p_right * right;
      change = std::max(change, std::abs(nv - v[i]));
      v[i] = nv;
    }
    if (change < 1e-14) break;
  }
  return v;
}

inline double chain_rms(const Network& net, const ChainConfig& c, const std::vector<double>& truth) {
  double sum = 0.0;
  std::vector<double> x(c.states, 0.0);
  for (std::size_t i = 0; i < c.states; ++i) {
    std::fill(x.begin(), x.end(), 0.0);
    x[i] = 1.0;
    const double d = evaluate(net, x) - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(c.states));
}

// Optimal action sets of the gridworld by value iteration.
inline std::vector<std::vector<std::size_t>> gridworld_optimal_actions(const GridWorld& g,
                                                                      double gamma) {
  const auto& cfg = g.config();
  const int cells = cfg.rows * cfg.cols;
  const int goal = g.goal_cell();
  std::vector<double> v(cells, 0.0);
  auto q = [&](int c, std::size_t a) {
    const int n = g.successor(c, a);
    return n == goal ? cfg.goal_reward : cfg.step_reward + gamma * v[n];
  };
  for (int it = 0; it < 10000; ++it) {
    double change = 0.0;
    for (int c = 0; c < cells; ++c) {
      if (c == goal) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < GridWorld::kActions; ++a) best = std::max(best, q(c, a));
      change = std::max(change, std::abs(best - v[c]));
      v[c] = best;
    }
    if (change < 1e-15) break;
  }
  std::vector<std::vector<std::size_t>> opt(cells);
  for (int c = 0; c < cells; ++c) {
    if (c == goal) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < GridWorld::kActions; ++a) best = std::max(best, q(c, a));
    for (std::size_t a = 0; a < GridWorld::kActions; ++a)
      if (q(c, a) >= best - 1e-12) opt[c].push_back(a);
  }
  return opt;
}

// Number of non-goal cells whose greedy action is not optimal.
inline int gridworld_policy_errors(const Network& net, const GridWorld& g,
                                   const std::vector<std::vector<std::size_t>>& opt) {
  const int cells = static_cast<int>(g.feature_dim());
  std::vector<double> x(cells, 0.0), qv(GridWorld::kActions);
  int errors = 0;
  for (int c = 0; c < cells; ++c) {
    if (c == g.goal_cell()) continue;
    std::fill(x.begin(), x.end(), 0.0);
    x[c] = 1.0;
    forward_outputs(net, x, qv);
    const std::size_t a = greedy_select(qv);
    if (std::find(opt[c].begin(), opt[c].end(), a) == opt[c].end()) ++errors;
  }
  return errors;
}

// ---------------------------------------------------------------------------
// Convergence runs shared by the learner tests and the acceptance binary.

struct WalkOutcome {
  double final_rms = 0.0;
  std::size_t first_below = 0;  // episode count when RMS first fell to the target, 0 if never
};

inline MetaParams walk_psi() { return {0.002, 1.0, 0.8, 1.0, 0.0}; }

inline WalkOutcome random_walk_run(std::uint64_t seed, std::size_t episodes, double target) {
  const ChainConfig cfg = ChainConfig::random_walk();
  const auto truth = chain_values(cfg);
  Network net(cfg.states, 0, 1, Activation::kDSiL);  // zero start, linear in one-hot inputs
  LearnerState ls(net, walk_psi());
  ChainEnvironment env(cfg);
  Rng rng = make_rng(seed, {tag(StreamTag::kEpisodes)});
  WalkOutcome out;
  for (std::size_t ep = 1; ep <= episodes; ++ep) {
    td_lambda_episode(ls, env, rng);
    if (!out.first_below && chain_rms(ls.net, cfg, truth) <= target) out.first_below = ep;
  }
  out.final_rms = chain_rms(ls.net, cfg, truth);
  return out;
}

struct GridOutcome {
  int final_errors = 0;
  std::size_t first_optimal = 0;  // episodes when the greedy policy first became optimal
};

inline MetaParams grid_psi() { return {0.1, 0.9, 0.5, 0.5, 0.002}; }

inline GridOutcome gridworld_run(std::uint64_t seed, std::size_t episodes) {
  GridWorld env{GridWorldConfig{}};
  const auto opt = gridworld_optimal_actions(env, grid_psi().gamma);
  Rng init = make_rng(seed, {tag(StreamTag::kWeights)});
  LearnerState ls(Network::random(env.feature_dim(), 0, GridWorld::kActions, Activation::kDSiL, init),
                  grid_psi());
  Rng rng = make_rng(seed, {tag(StreamTag::kEpisodes)});
  GridOutcome out;
  for (std::size_t ep = 1; ep <= episodes; ++ep) {
    sarsa_lambda_episode(ls, env, rng);
    if (ep % 100 == 0 && !out.first_optimal && gridworld_policy_errors(ls.net, env, opt) == 0)
      out.first_optimal = ep;
  }
  out.final_errors = gridworld_policy_errors(ls.net, env, opt);
  return out;
}

// ---------------------------------------------------------------------------
// Tetris invariants

struct DropStats {
  std::size_t drops = 0;
  std::size_t conservation_failures = 0;
  int max_cleared = 0;
  std::size_t games = 0;
};

// Uniformly random placements on a fresh board per game. Checks that every
// non-terminal drop adds exactly four cells minus a full width per cleared row.
inline DropStats random_drops(tetris::Variant v, int width, int height, std::size_t drops,
                              std::uint64_t seed) {
  Rng rng(seed);
  DropStats st;
  tetris::Board board(width, height);
  while (st.drops < drops) {
    const tetris::Piece p = tetris::sample_piece(v, rng);
    const auto actions = tetris::enumerate_actions(board, p);
    const auto& pl = actions[uniform_index(rng, actions.size())];
    const tetris::DropResult r = tetris::drop(board, pl);
    ++st.drops;
    if (r.terminal) {
      board = tetris::Board(width, height);
      ++st.games;
      continue;
    }
    if (r.board.occupied_count() != board.occupied_count() + 4 - width * r.cleared)
      ++st.conservation_failures;
    st.max_cleared = std::max(st.max_cleared, r.cleared);
    board = r.board;
  }
  return st;
}

// ---------------------------------------------------------------------------
// SUS statistics

struct SusStats {
  bool counts_in_bounds = true;
  std::array<double, 4> mean{};
  std::array<double, 4> stderr_{};
  std::array<double, 4> expected{};
  double worst_z = 0.0;
};

inline SusStats sus_statistics(std::size_t trials, std::uint64_t seed) {
  const std::array<double, 4> fitness = {4, 3, 2, 1};
  SusStats st;
  std::array<double, 4> sum{}, sum_sq{};
  Rng rng(seed);
  for (std::size_t i = 0; i < 4; ++i) st.expected[i] = 4.0 * fitness[i] / 10.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto picks = sus_select(fitness, 4, rng);
    std::array<int, 4> count{};
    for (std::size_t p : picks) ++count[p];
    for (std::size_t i = 0; i < 4; ++i) {
      const int lo = static_cast<int>(std::floor(st.expected[i]));
      const int hi = static_cast<int>(std::ceil(st.expected[i]));
      if (count[i] != lo && count[i] != hi) st.counts_in_bounds = false;
      sum[i] += count[i];
      sum_sq[i] += static_cast<double>(count[i]) * count[i];
    }
  }
  const double n = static_cast<double>(trials);
  for (std::size_t i = 0; i < 4; ++i) {
    st.mean[i] = sum[i] / n;
    const double var = std::max(0.0, sum_sq[i] / n - st.mean[i] * st.mean[i]);
    st.stderr_[i] = std::sqrt(var / n);
    const double z = st.stderr_[i] > 0 ? std::abs(st.mean[i] - st.expected[i]) / st.stderr_[i]
                                       : (st.mean[i] == st.expected[i] ? 0.0 : 1e9);
    st.worst_z = std::max(st.worst_z, z);
  }
  return st;
}

}  // namespace ompac::testing
