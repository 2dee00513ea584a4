#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ompac/environment.hpp"
#include "ompac/learner.hpp"
#include "ompac/metaparams.hpp"
#include "ompac/random.hpp"

namespace ompac {

// One competing algorithm instance. `id` is the population slot.
struct Instance {
  std::size_t id = 0;
  LearnerState learner;
  double score = 0.0;  // F, summed task points of the current generation
  bool failed = false; // diverged during the current generation
};

struct PopulationConfig {
  std::size_t size = 12;
  std::size_t episodes_per_generation = 100;
  NoiseConfig noise;
};

struct Population {
  std::vector<Instance> instances;
  std::uint64_t generation = 0;
  PopulationConfig config;
};

struct NetworkShape {
  std::size_t hidden = 50;
  Activation activation = Activation::kDSiL;
};

using EnvironmentFactory = std::function<EnvironmentHandle()>;

// Input and output sizes a learner needs for environments built by `factory`.
struct LearnerDims {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
};
LearnerDims learner_dims(const EnvironmentFactory& factory);

// Builds N instances with per-instance random weights. Meta-parameters are
// drawn around `start` with init_population, or copied verbatim when
// `perturb` is false (fixed baselines).
Population make_population(const PopulationConfig& cfg, const MetaParams& start,
                           const NetworkShape& shape, const LearnerDims& dims,
                           std::uint64_t seed, bool perturb);

struct EpisodeRecord {
  std::size_t instance = 0;
  std::uint64_t generation = 0;
  std::uint64_t episode_index = 0;
  double score = 0.0;
  double discounted_return = 0.0;
  double temperature = 0.0;
  std::uint64_t steps = 0;
};

// Runs episodes_per_generation episodes on every instance, spread over up to
// `workers` threads. Instance k draws from the stream
// derive_seed(seed, {kEpisodes, k, generation}), so the outcome does not
// depend on scheduling. Scores are reset first. An instance whose weights or
// values go non-finite stops early, is marked failed and scores 0.
// Returns per-instance episode records.
std::vector<std::vector<EpisodeRecord>> evaluate_generation(Population& pop,
                                                            const EnvironmentFactory& factory,
                                                            std::uint64_t seed,
                                                            std::size_t workers);

// Stochastic universal sampling: `slots` pointers spaced total/slots apart
// from one uniform offset. Negative fitness is shifted up by the minimum; if
// every fitness is zero, parents are drawn uniformly instead.
std::vector<std::size_t> sus_select(std::span<const double> fitness, std::size_t slots, Rng& rng);

// True when sus_select had to fall back to uniform parents for this fitness.
bool sus_degenerate(std::span<const double> fitness) noexcept;

// Argmax of the scores, lowest id on ties.
std::size_t elite_index(std::span<const Instance> instances) noexcept;

struct GenerationReport {
  std::uint64_t generation = 0;  // the generation that was just evaluated
  std::vector<double> scores;
  std::vector<MetaParams> psi_used;              // during the evaluated generation
  std::vector<std::uint64_t> episode_index;      // after the evaluated generation
  std::vector<char> failed;
  std::size_t elite = 0;
  std::vector<std::size_t> parents;              // slot -> parent slot for the next generation
  std::vector<MetaParams> psi_next;              // after mutation
  bool uniform_fallback = false;
};

// Selection and mutation at the generation barrier. The elite keeps its slot
// and is not mutated; every other slot receives a deep copy of an SUS-selected
// parent (weights, meta-parameters, episode counter) and then mutate() is
// applied to its meta-parameters. Advances the generation counter.
GenerationReport step_generation(Population& pop, Rng& rng);

// Report for a generation without selection (fixed baselines): each slot is
// its own parent and nothing is mutated. Advances the generation counter.
GenerationReport hold_generation(Population& pop);

}  // namespace ompac
