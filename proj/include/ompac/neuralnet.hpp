#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ompac/random.hpp"

namespace ompac {

// Logistic function, evaluated on the branch that cannot overflow.
double sigmoid(double x) noexcept;

// Sigmoid-weighted linear unit: z * sigmoid(z).
double sil(double z) noexcept;

// Derivative of sil, also used as an activation in its own right:
// sigmoid(z) * (1 + z * (1 - sigmoid(z))).
double dsil(double z) noexcept;

// Derivative of dsil: sigmoid(z)(1 - sigmoid(z))(2 + z(1 - sigmoid(z)) - z sigmoid(z)).
double dsil_prime(double z) noexcept;

enum class Activation { kSiL, kDSiL };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

using TraceVector = std::vector<double>;
using Gradient = std::vector<double>;

// Shallow feed-forward network: one hidden layer of SiL or dSiL units and a
// linear output layer. With hidden_dim == 0 the hidden layer is bypassed and
// the network is the bias-free linear map s^T w_out (tabular with one-hot s).
//
// All parameters live in one flat vector, laid out as
//   w_in      [input_dim][hidden_dim]
//   b_hidden  [hidden_dim]
//   w_out     [width][output_dim]      width = hidden_dim, or input_dim if bypassed
//   b_out     [output_dim]             absent if bypassed
// Gradients and eligibility traces share this layout.
class Network {
 public:
  Network() = default;
  Network(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
          Activation activation);

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, biases included.
  static Network random(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                        Activation activation, Rng& rng);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  Activation activation() const noexcept { return activation_; }
  bool bypassed() const noexcept { return hidden_dim_ == 0; }
  bool has_output_bias() const noexcept { return !bypassed(); }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  // Offsets of the four blocks inside the flat parameter vector.
  std::size_t w_in_offset() const noexcept { return 0; }
  std::size_t b_hidden_offset() const noexcept { return input_dim_ * hidden_dim_; }
  std::size_t w_out_offset() const noexcept { return b_hidden_offset() + hidden_dim_; }
  std::size_t b_out_offset() const noexcept { return w_out_offset() + width() * output_dim_; }

  double& w_in(std::size_t input, std::size_t hidden) {
    return params_[input * hidden_dim_ + hidden];
  }
  double& b_hidden(std::size_t hidden) { return params_[b_hidden_offset() + hidden]; }
  double& w_out(std::size_t from, std::size_t output) {
    return params_[w_out_offset() + from * output_dim_ + output];
  }
  double& b_out(std::size_t output) {
    if (bypassed()) throw std::logic_error("bypassed network has no output bias");
    return params_[b_out_offset() + output];
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::size_t width() const noexcept { return hidden_dim_ == 0 ? input_dim_ : hidden_dim_; }

  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t output_dim_ = 0;
  Activation activation_ = Activation::kDSiL;
  std::vector<double> params_;
};

struct ForwardResult {
  std::vector<double> outputs;
  std::vector<double> hidden_pre;  // z_k per hidden unit
};

// Zero inputs are skipped, so sparse binary feature vectors are cheap.
ForwardResult forward(const Network& net, std::span<const double> s);

// Only the outputs; avoids the hidden_pre allocation on hot paths.
void forward_outputs(const Network& net, std::span<const double> s, std::span<double> outputs);

// Value of a single output.
double evaluate(const Network& net, std::span<const double> s, std::size_t output_index = 0);

// Gradient of outputs[output_index] with respect to every parameter.
Gradient gradient(const Network& net, std::span<const double> s, std::size_t output_index);

// Same, written into `grad` (resized as needed). Returns the output value.
double value_and_gradient(const Network& net, std::span<const double> s,
                          std::size_t output_index, Gradient& grad);

// e <- gamma * lambda * e + grad
void accumulate_trace(TraceVector& e, std::span<const double> grad, double gamma, double lambda);

// theta <- theta + alpha * delta * e
void apply_update(Network& net, std::span<const double> e, double alpha, double delta);

inline constexpr int kNetworkFormatVersion = 1;

void to_json(nlohmann::json& j, const Network& net);
void from_json(const nlohmann::json& j, Network& net);

}  // namespace ompac
