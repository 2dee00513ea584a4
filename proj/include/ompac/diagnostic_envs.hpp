#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ompac/environment.hpp"

namespace ompac {

// Chain of states 0..n-1 with terminals off both ends. From state s the walk
// moves right with probability p_right, otherwise left. Leaving the left end
// pays left_reward, leaving the right end pays right_reward; moving between
// non-terminal states pays step_rewards[s] (zero when the vector is empty).
// There is a single action, so the learner only predicts values.
struct ChainConfig {
  std::size_t states = 19;
  std::size_t start = 9;
  double p_right = 0.5;
  double left_reward = -1.0;
  double right_reward = 1.0;
  std::vector<double> step_rewards;

  static ChainConfig random_walk(std::size_t states = 19);
};

class ChainEnvironment final : public AfterstateEnvironment {
 public:
  explicit ChainEnvironment(ChainConfig cfg);

  std::size_t feature_dim() const override { return cfg_.states; }
  void reset(Rng& rng) override;
  std::span<const double> state_features() const override { return features_; }
  std::size_t action_count() const override { return 1; }
  Candidate preview(std::size_t action) override;
  Transition step(std::size_t action, Rng& rng) override;

  std::size_t position() const noexcept { return pos_; }
  const ChainConfig& config() const noexcept { return cfg_; }

 private:
  void encode();

  ChainConfig cfg_;
  std::size_t pos_ = 0;
  std::vector<double> features_;
};

// rows x cols grid with one absorbing goal cell. Actions 0..3 are up, down,
// left, right; bumping into the border leaves the agent in place. Entering the
// goal pays goal_reward and ends the episode; every other move pays step_reward.
// Episodes start in a uniformly random non-goal cell unless a fixed start is set.
struct GridWorldConfig {
  int rows = 5;
  int cols = 5;
  int goal_row = 4;
  int goal_col = 4;
  double goal_reward = 1.0;
  double step_reward = 0.0;
};

class GridWorld final : public ActionEnvironment {
 public:
  static constexpr std::size_t kActions = 4;

  explicit GridWorld(GridWorldConfig cfg);

  std::size_t feature_dim() const override {
    return static_cast<std::size_t>(cfg_.rows * cfg_.cols);
  }
  std::size_t action_count() const override { return kActions; }
  void reset(Rng& rng) override;
  std::span<const double> state_features() const override { return features_; }
  Transition step(std::size_t action, Rng& rng) override;

  void set_fixed_start(std::optional<int> cell) { fixed_start_ = cell; }
  int cell() const noexcept { return cell_; }
  int goal_cell() const noexcept { return cfg_.goal_row * cfg_.cols + cfg_.goal_col; }
  const GridWorldConfig& config() const noexcept { return cfg_; }

  // Deterministic successor of `cell` under `action`.
  int successor(int cell, std::size_t action) const;

 private:
  void encode();

  GridWorldConfig cfg_;
  int cell_ = 0;
  std::optional<int> fixed_start_;
  std::vector<double> features_;
};

}  // namespace ompac
