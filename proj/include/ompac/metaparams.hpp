#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ompac/random.hpp"

namespace ompac {

// The evolvable meta-parameter vector of one learner.
struct MetaParams {
  double alpha = 0.001;   // learning rate, (0, 1]
  double gamma = 0.99;    // discount factor, [0, 1]
  double lambda = 0.55;   // trace decay, [0, 1]
  double tau0 = 0.5;      // initial softmax temperature, > 0
  double tauk = 0.00025;  // hyperbolic temperature decay per episode, >= 0

  static constexpr std::size_t kFieldCount = 5;
  static constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
      "alpha", "gamma", "lambda", "tau0", "tauk"};

  double& field(std::size_t k);
  double field(std::size_t k) const;

  // Whether field k lives in [0, 1] and uses the bounded noise scale.
  static constexpr bool is_bounded(std::size_t k) noexcept { return k < 3; }

  bool valid() const noexcept;

  friend bool operator==(const MetaParams&, const MetaParams&) = default;
};

// Lower and upper clamp limits applied after noise.
inline constexpr double kAlphaFloor = 1e-8;
inline constexpr double kTau0Floor = 1e-8;

MetaParams clamp(MetaParams psi) noexcept;

struct NoiseConfig {
  double p_n = 0.1;     // per-field mutation probability
  double eta_n = 0.05;  // noise magnitude factor
};

// Standard deviation of the additive Gaussian noise for one meta-parameter.
// Bounded values (in [0, 1]) scale with the distance to the nearer bound;
// unbounded ones scale with their own magnitude. Throws std::invalid_argument
// on negative psi in the unbounded case or psi outside [0, 1] when bounded.
double noise_stddev(double psi, bool bounded, double eta_n);

// Perturbs each field independently with probability cfg.p_n, then clamps.
// Fields that are not perturbed are returned untouched.
MetaParams mutate(const MetaParams& psi, const NoiseConfig& cfg, Rng& rng);

// n vectors around `start`, every field perturbed (probability 1).
std::vector<MetaParams> init_population(const MetaParams& start, std::size_t n,
                                        const NoiseConfig& cfg, Rng& rng);

void to_json(nlohmann::json& j, const MetaParams& psi);
void from_json(const nlohmann::json& j, MetaParams& psi);
void to_json(nlohmann::json& j, const NoiseConfig& cfg);
void from_json(const nlohmann::json& j, NoiseConfig& cfg);

}  // namespace ompac
