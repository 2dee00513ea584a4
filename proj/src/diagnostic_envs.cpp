#include "ompac/diagnostic_envs.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ompac {

ChainConfig ChainConfig::random_walk(std::size_t states) {
  ChainConfig c;
  c.states = states;
  c.start = states / 2;
  return c;
}

ChainEnvironment::ChainEnvironment(ChainConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.states == 0) throw std::invalid_argument("chain: needs at least one state");
  if (cfg_.start >= cfg_.states) throw std::invalid_argument("chain: start out of range");
  if (!cfg_.step_rewards.empty() && cfg_.step_rewards.size() != cfg_.states)
    throw std::invalid_argument("chain: step_rewards must have one entry per state");
  features_.assign(cfg_.states, 0.0);
  pos_ = cfg_.start;
  encode();
}

void ChainEnvironment::encode() {
  std::fill(features_.begin(), features_.end(), 0.0);
  features_[pos_] = 1.0;
}

void ChainEnvironment::reset(Rng&) {
  pos_ = cfg_.start;
  encode();
}

Candidate ChainEnvironment::preview(std::size_t action) {
  if (action != 0) throw EnvironmentError("chain: only action 0 exists");
  return {features_, false};
}

Transition ChainEnvironment::step(std::size_t action, Rng& rng) {
  if (action != 0) throw EnvironmentError("chain: only action 0 exists");
  const bool right = uniform01(rng) < cfg_.p_right;
  if (!right && pos_ == 0) return {cfg_.left_reward, 0.0, true};
  if (right && pos_ + 1 == cfg_.states) return {cfg_.right_reward, 0.0, true};
  const double r = cfg_.step_rewards.empty() ? 0.0 : cfg_.step_rewards[pos_];
  pos_ = right ? pos_ + 1 : pos_ - 1;
  encode();
  return {r, 0.0, false};
}

GridWorld::GridWorld(GridWorldConfig cfg) : cfg_(cfg) {
  if (cfg_.rows < 1 || cfg_.cols < 1 || cfg_.rows * cfg_.cols < 2)
    throw std::invalid_argument("gridworld: needs at least two cells");
  if (cfg_.goal_row < 0 || cfg_.goal_row >= cfg_.rows || cfg_.goal_col < 0 ||
      cfg_.goal_col >= cfg_.cols)
    throw std::invalid_argument("gridworld: goal outside the grid");
  features_.assign(feature_dim(), 0.0);
  encode();
}

void GridWorld::encode() {
  std::fill(features_.begin(), features_.end(), 0.0);
  features_[static_cast<std::size_t>(cell_)] = 1.0;
}

int GridWorld::successor(int cell, std::size_t action) const {
  int r = cell / cfg_.cols;
  int c = cell % cfg_.cols;
  switch (action) {
    case 0: r = std::min(r + 1, cfg_.rows - 1); break;
    case 1: r = std::max(r - 1, 0); break;
    case 2: c = std::max(c - 1, 0); break;
    case 3: c = std::min(c + 1, cfg_.cols - 1); break;
    default: throw EnvironmentError("gridworld: action " + std::to_string(action));
  }
  return r * cfg_.cols + c;
}

void GridWorld::reset(Rng& rng) {
  if (fixed_start_) {
    if (*fixed_start_ < 0 || *fixed_start_ >= cfg_.rows * cfg_.cols ||
        *fixed_start_ == goal_cell())
      throw EnvironmentError("gridworld: invalid fixed start");
    cell_ = *fixed_start_;
  } else {
    // Uniform over the non-goal cells.
    const int n = cfg_.rows * cfg_.cols;
    int pick = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - 1)));
    if (pick >= goal_cell()) ++pick;
    cell_ = pick;
  }
  encode();
}

Transition GridWorld::step(std::size_t action, Rng&) {
  cell_ = successor(cell_, action);
  encode();
  if (cell_ == goal_cell()) return {cfg_.goal_reward, 1.0, true};
  return {cfg_.step_reward, 0.0, false};
}

}  // namespace ompac
