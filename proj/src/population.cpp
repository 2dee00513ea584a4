#include "ompac/population.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <variant>

namespace ompac {

LearnerDims learner_dims(const EnvironmentFactory& factory) {
  EnvironmentHandle env = factory();
  return std::visit(
      [](auto& e) -> LearnerDims {
        using T = std::decay_t<decltype(*e)>;
        if constexpr (std::is_same_v<T, AfterstateEnvironment>)
          return {e->feature_dim(), 1};
        else
          return {e->feature_dim(), e->action_count()};
      },
      env);
}

Population make_population(const PopulationConfig& cfg, const MetaParams& start,
                           const NetworkShape& shape, const LearnerDims& dims,
                           std::uint64_t seed, bool perturb) {
  if (cfg.size == 0) throw std::invalid_argument("population size must be at least 1");
  Population pop;
  pop.config = cfg;
  std::vector<MetaParams> psis(cfg.size, start);
  if (perturb) {
    Rng meta_rng = make_rng(seed, {tag(StreamTag::kMetaInit)});
    psis = init_population(start, cfg.size, cfg.noise, meta_rng);
  }
  pop.instances.reserve(cfg.size);
  for (std::size_t k = 0; k < cfg.size; ++k) {
    Rng w = make_rng(seed, {tag(StreamTag::kWeights), k});
    Instance inst;
    inst.id = k;
    inst.learner = LearnerState(
        Network::random(dims.inputs, shape.hidden, dims.outputs, shape.activation, w), psis[k]);
    pop.instances.push_back(std::move(inst));
  }
  return pop;
}

namespace {

std::vector<EpisodeRecord> evaluate_instance(Instance& inst, std::uint64_t generation,
                                             std::size_t episodes,
                                             const EnvironmentFactory& factory,
                                             std::uint64_t seed) {
  std::vector<EpisodeRecord> records;
  records.reserve(episodes);
  inst.score = 0.0;
  inst.failed = false;
  if (episodes == 0) return records;
  Rng rng = make_rng(seed, {tag(StreamTag::kEpisodes), inst.id, generation});
  EnvironmentHandle env = factory();
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::uint64_t index = inst.learner.episode_index;
    EpisodeResult r;
    try {
      r = run_episode(inst.learner, env, rng);
    } catch (const NumericalDivergence&) {
      inst.failed = true;
    }
    if (!inst.failed && !inst.learner.net.all_finite()) inst.failed = true;
    if (inst.failed) break;
    inst.score += r.score;
    records.push_back({inst.id, generation, index, r.score, r.discounted_return, r.temperature,
                       r.steps});
  }
  if (inst.failed) inst.score = 0.0;
  return records;
}

}  // namespace

std::vector<std::vector<EpisodeRecord>> evaluate_generation(Population& pop,
                                                            const EnvironmentFactory& factory,
                                                            std::uint64_t seed,
                                                            std::size_t workers) {
  const std::size_t n = pop.instances.size();
  std::vector<std::vector<EpisodeRecord>> records(n);
  if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        records[k] = evaluate_instance(pop.instances[k], pop.generation,
                                       pop.config.episodes_per_generation, factory, seed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return records;
}

bool sus_degenerate(std::span<const double> fitness) noexcept {
  if (fitness.empty()) return true;
  const auto [lo, hi] = std::minmax_element(fitness.begin(), fitness.end());
  const double shift = *lo < 0.0 ? -*lo : 0.0;
  return !(*hi + shift > 0.0);
}

std::vector<std::size_t> sus_select(std::span<const double> fitness, std::size_t slots,
                                    Rng& rng) {
  if (fitness.empty()) throw std::invalid_argument("sus_select: empty fitness vector");
  for (double f : fitness)
    if (!std::isfinite(f)) throw std::invalid_argument("sus_select: non-finite fitness");
  std::vector<std::size_t> parents;
  parents.reserve(slots);
  if (slots == 0) return parents;

  if (sus_degenerate(fitness)) {
    for (std::size_t j = 0; j < slots; ++j) parents.push_back(uniform_index(rng, fitness.size()));
    return parents;
  }

  const double lo = *std::min_element(fitness.begin(), fitness.end());
  const double shift = lo < 0.0 ? -lo : 0.0;
  double total = 0.0;
  for (double f : fitness) total += f + shift;
  const double spacing = total / static_cast<double>(slots);
  const double start = uniform01(rng) * spacing;

  std::size_t i = 0;
  double cum = fitness[0] + shift;
  for (std::size_t j = 0; j < slots; ++j) {
    const double pointer = start + static_cast<double>(j) * spacing;
    while (pointer >= cum && i + 1 < fitness.size()) cum += fitness[++i] + shift;
    parents.push_back(i);
  }
  return parents;
}

std::size_t elite_index(std::span<const Instance> instances) noexcept {
  // Diverged instances only win when every instance diverged.
  std::size_t best = 0;
  for (std::size_t k = 1; k < instances.size(); ++k) {
    const Instance& a = instances[k];
    const Instance& b = instances[best];
    if ((b.failed && !a.failed) || (a.failed == b.failed && a.score > b.score)) best = k;
  }
  return best;
}

namespace {

GenerationReport begin_report(const Population& pop) {
  GenerationReport rep;
  rep.generation = pop.generation;
  for (const Instance& inst : pop.instances) {
    rep.scores.push_back(inst.score);
    rep.psi_used.push_back(inst.learner.psi);
    rep.episode_index.push_back(inst.learner.episode_index);
    rep.failed.push_back(inst.failed ? 1 : 0);
  }
  return rep;
}

}  // namespace

GenerationReport step_generation(Population& pop, Rng& rng) {
  const std::size_t n = pop.instances.size();
  GenerationReport rep = begin_report(pop);
  rep.elite = elite_index(pop.instances);
  rep.uniform_fallback = sus_degenerate(rep.scores);

  std::vector<std::size_t> drawn;
  if (rep.uniform_fallback) {
    std::vector<std::size_t> healthy;
    for (const Instance& inst : pop.instances)
      if (!inst.failed) healthy.push_back(inst.id);
    if (healthy.empty()) healthy.push_back(rep.elite);
    for (std::size_t j = 0; j + 1 < n; ++j)
      drawn.push_back(healthy[uniform_index(rng, healthy.size())]);
  } else {
    drawn = sus_select(rep.scores, n - 1, rng);
  }
  std::vector<Instance> next;
  next.reserve(n);
  rep.parents.assign(n, 0);
  std::size_t d = 0;
  for (std::size_t slot = 0; slot < n; ++slot) {
    const std::size_t parent = slot == rep.elite ? rep.elite : drawn[d++];
    rep.parents[slot] = parent;
    Instance child = pop.instances[parent];
    child.id = slot;
    child.score = 0.0;
    child.failed = false;
    std::fill(child.learner.trace.begin(), child.learner.trace.end(), 0.0);
    if (slot != rep.elite) child.learner.psi = mutate(child.learner.psi, pop.config.noise, rng);
    next.push_back(std::move(child));
  }
  pop.instances = std::move(next);
  for (const Instance& inst : pop.instances) rep.psi_next.push_back(inst.learner.psi);
  ++pop.generation;
  return rep;
}

GenerationReport hold_generation(Population& pop) {
  GenerationReport rep = begin_report(pop);
  rep.elite = elite_index(pop.instances);
  rep.parents.resize(pop.instances.size());
  std::iota(rep.parents.begin(), rep.parents.end(), std::size_t{0});
  for (Instance& inst : pop.instances) {
    inst.score = 0.0;
    inst.failed = false;
    rep.psi_next.push_back(inst.learner.psi);
  }
  ++pop.generation;
  return rep;
}

}  // namespace ompac
