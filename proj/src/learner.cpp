#include "ompac/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ompac {

double temperature(const MetaParams& psi, std::uint64_t i) noexcept {
  return psi.tau0 / (1.0 + psi.tauk * static_cast<double>(i));
}

double inverse_temperature(const MetaParams& psi, std::uint64_t i) noexcept {
  return (1.0 + psi.tauk * static_cast<double>(i)) / psi.tau0;
}

namespace {

// Unnormalized weights exp((v - max) / tau) written to `w`; returns their sum.
double boltzmann_weights(std::span<const double> values, double tau, std::vector<double>& w) {
  if (values.empty()) throw std::invalid_argument("softmax over an empty value set");
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  const double vmax = *std::max_element(values.begin(), values.end());
  w.resize(values.size());
  double total = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    w[a] = std::exp((values[a] - vmax) / tau);
    total += w[a];
  }
  return total;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalDivergence(std::string("non-finite ") + what);
}

}  // namespace

std::vector<double> softmax_probabilities(std::span<const double> values, double tau) {
  std::vector<double> w;
  const double total = boltzmann_weights(values, tau, w);
  for (double& x : w) x /= total;
  return w;
}

std::size_t softmax_select(std::span<const double> values, double tau, Rng& rng) {
  thread_local std::vector<double> w;
  const double total = boltzmann_weights(values, tau, w);
  const double target = uniform01(rng) * total;
  double cum = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    cum += w[a];
    if (target < cum) return a;
  }
  // Rounding left target at the very top; take the last non-zero weight.
  for (std::size_t a = w.size(); a-- > 0;)
    if (w[a] > 0.0) return a;
  return w.size() - 1;
}

std::size_t greedy_select(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a)
    if (values[a] > values[best]) best = a;
  return best;
}

EpisodeResult td_lambda_episode(LearnerState& ls, AfterstateEnvironment& env, Rng& rng) {
  const MetaParams& psi = ls.psi;
  EpisodeResult result;
  result.temperature = temperature(psi, ls.episode_index);

  env.reset(rng);
  std::fill(ls.trace.begin(), ls.trace.end(), 0.0);
  std::vector<double> values;
  Gradient grad;
  double discount = 1.0;

  for (;;) {
    const std::size_t n = env.action_count();
    if (n == 0) throw EnvironmentError("environment offers no actions");
    values.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      const Candidate c = env.preview(a);
      values[a] = c.terminal ? 0.0 : evaluate(ls.net, c.features);
      require_finite(values[a], "afterstate value");
    }
    const std::size_t action = n == 1 ? 0 : softmax_select(values, result.temperature, rng);

    // Gradient and value of the current state under the current weights.
    const double v_now = value_and_gradient(ls.net, env.state_features(), 0, grad);
    require_finite(v_now, "state value");

    const Transition tr = env.step(action, rng);
    result.score += tr.score;
    result.discounted_return += discount * tr.reward;
    discount *= psi.gamma;
    ++result.steps;

    accumulate_trace(ls.trace, grad, psi.gamma, psi.lambda);
    double delta;
    if (tr.terminal) {
      delta = tr.reward - v_now;
    } else {
      const double v_next = evaluate(ls.net, env.state_features());
      require_finite(v_next, "next-state value");
      delta = tr.reward + psi.gamma * v_next - v_now;
    }
    apply_update(ls.net, ls.trace, psi.alpha, delta);
    if (tr.terminal) break;
  }
  ++ls.episode_index;
  return result;
}

EpisodeResult sarsa_lambda_episode(LearnerState& ls, ActionEnvironment& env, Rng& rng) {
  const MetaParams& psi = ls.psi;
  EpisodeResult result;
  result.temperature = temperature(psi, ls.episode_index);
  const std::size_t n = env.action_count();
  if (n != ls.net.output_dim())
    throw std::invalid_argument("Q-network outputs do not match the action count");

  std::vector<double> q(n);
  Gradient grad;
  double discount = 1.0;

  env.reset(rng);
  std::vector<double> s(env.state_features().begin(), env.state_features().end());
  forward_outputs(ls.net, s, q);
  std::size_t a = softmax_select(q, result.temperature, rng);
  std::fill(ls.trace.begin(), ls.trace.end(), 0.0);

  for (;;) {
    const Transition tr = env.step(a, rng);
    result.score += tr.score;
    result.discounted_return += discount * tr.reward;
    discount *= psi.gamma;
    ++result.steps;

    const double q_sa = value_and_gradient(ls.net, s, a, grad);
    require_finite(q_sa, "action value");
    accumulate_trace(ls.trace, grad, psi.gamma, psi.lambda);
    double delta;
    if (tr.terminal) {
      delta = tr.reward - q_sa;
    } else {
      s.assign(env.state_features().begin(), env.state_features().end());
      forward_outputs(ls.net, s, q);
      for (double v : q) require_finite(v, "action value");
      const std::size_t next = softmax_select(q, result.temperature, rng);
      delta = tr.reward + psi.gamma * q[next] - q_sa;
      a = next;
    }
    apply_update(ls.net, ls.trace, psi.alpha, delta);
    if (tr.terminal) break;
  }
  ++ls.episode_index;
  return result;
}

EpisodeResult run_episode(LearnerState& ls, EnvironmentHandle& env, Rng& rng) {
  return std::visit(
      [&](auto& e) -> EpisodeResult {
        using T = std::decay_t<decltype(*e)>;
        if constexpr (std::is_same_v<T, AfterstateEnvironment>)
          return td_lambda_episode(ls, *e, rng);
        else
          return sarsa_lambda_episode(ls, *e, rng);
      },
      env);
}

}  // namespace ompac
