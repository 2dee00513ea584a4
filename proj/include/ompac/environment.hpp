#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "ompac/random.hpp"

namespace ompac {

// Outcome of committing one action.
struct Transition {
  double reward = 0.0;  // learning signal
  double score = 0.0;   // task points, used for selection
  bool terminal = false;
};

// A deterministic preview of where an action leads.
struct Candidate {
  std::span<const double> features;  // empty when terminal
  bool terminal = false;
};

// Environments whose actions lead to a deterministic afterstate f(s, a).
// The learner evaluates V on every candidate afterstate and learns V on the
// sequence of states returned by state_features().
class AfterstateEnvironment {
 public:
  virtual ~AfterstateEnvironment() = default;

  virtual std::size_t feature_dim() const = 0;
  virtual void reset(Rng& rng) = 0;
  virtual std::span<const double> state_features() const = 0;
  virtual std::size_t action_count() const = 0;
  // Valid until the next call to preview(), step() or reset().
  virtual Candidate preview(std::size_t action) = 0;
  virtual Transition step(std::size_t action, Rng& rng) = 0;
};

// Environments with a fixed discrete action set, learned with action values.
class ActionEnvironment {
 public:
  virtual ~ActionEnvironment() = default;

  virtual std::size_t feature_dim() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual void reset(Rng& rng) = 0;
  virtual std::span<const double> state_features() const = 0;
  virtual Transition step(std::size_t action, Rng& rng) = 0;
};

using EnvironmentHandle =
    std::variant<std::unique_ptr<AfterstateEnvironment>, std::unique_ptr<ActionEnvironment>>;

// Raised by environments when a step cannot be carried out.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ompac
