#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ompac/environment.hpp"
#include "ompac/metaparams.hpp"
#include "ompac/neuralnet.hpp"
#include "ompac/random.hpp"

namespace ompac {

// Everything one learning agent carries between episodes.
struct LearnerState {
  Network net;
  TraceVector trace;  // zeroed at the start of every episode
  MetaParams psi;
  std::uint64_t episode_index = 0;  // cumulative, drives the temperature schedule

  LearnerState() = default;
  LearnerState(Network n, MetaParams p, std::uint64_t i = 0)
      : net(std::move(n)), trace(net.parameter_count(), 0.0), psi(p), episode_index(i) {}
};

struct EpisodeResult {
  double score = 0.0;              // task points
  double discounted_return = 0.0;  // sum of gamma^t r_t, diagnostics only
  std::uint64_t steps = 0;
  double temperature = 0.0;        // tau(i) used during the episode
};

// A value estimate left the finite range; the instance cannot continue.
class NumericalDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// tau0 / (1 + tauk * i)
double temperature(const MetaParams& psi, std::uint64_t i) noexcept;
// (1 + tauk * i) / tau0
double inverse_temperature(const MetaParams& psi, std::uint64_t i) noexcept;

// Boltzmann probabilities exp(v_a / tau) / sum_b exp(v_b / tau), computed
// after subtracting the maximum value.
std::vector<double> softmax_probabilities(std::span<const double> values, double tau);

// Samples from softmax_probabilities using exactly one uniform draw u: the
// result is the first index whose cumulative weight exceeds u times the total.
std::size_t softmax_select(std::span<const double> values, double tau, Rng& rng);

// Index of the maximum value; ties go to the lowest index.
std::size_t greedy_select(std::span<const double> values) noexcept;

// One TD(lambda) episode over an afterstate environment. At every step V is
// evaluated on each candidate afterstate (terminal candidates count as 0) and
// an action is sampled by softmax at temperature(psi, i). The update uses
//   e <- gamma lambda e + grad V(s_t)
//   delta = r + gamma V(s_{t+1}) - V(s_t)    (delta = r - V(s_t) on the terminal step)
//   theta <- theta + alpha delta e
// and the episode index is advanced by one.
EpisodeResult td_lambda_episode(LearnerState& ls, AfterstateEnvironment& env, Rng& rng);

// One Sarsa(lambda) episode. Update order:
// the trace is updated before delta, and in the non-terminal branch the next
// action is sampled before delta is formed.
EpisodeResult sarsa_lambda_episode(LearnerState& ls, ActionEnvironment& env, Rng& rng);

// Dispatches on the environment kind.
EpisodeResult run_episode(LearnerState& ls, EnvironmentHandle& env, Rng& rng);

}  // namespace ompac
