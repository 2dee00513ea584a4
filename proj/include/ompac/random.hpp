#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ompac {

// Every random stream in the library is a 64-bit Mersenne twister. Streams are
// never shared between instances; each one is derived from the run seed plus a
// list of integer keys (instance id, generation, purpose tag).
using Rng = std::mt19937_64;

// splitmix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(root);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
  return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(root, keys));
}

// Purpose tags for derive_seed, so that streams for different jobs never collide.
enum class StreamTag : std::uint64_t {
  kWeights = 1,
  kMetaInit = 2,
  kEpisodes = 3,
  kSelection = 4,
};

constexpr std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace ompac
