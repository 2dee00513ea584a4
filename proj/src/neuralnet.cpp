#include "ompac/neuralnet.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ompac {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sil(double z) noexcept { return z * sigmoid(z); }

double dsil(double z) noexcept {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

double dsil_prime(double z) noexcept {
  const double s = sigmoid(z);
  return s * (1.0 - s) * (2.0 + z * (1.0 - s) - z * s);
}

std::string_view to_string(Activation a) noexcept {
  return a == Activation::kSiL ? "sil" : "dsil";
}

Activation activation_from_string(std::string_view name) {
  if (name == "sil" || name == "SiL") return Activation::kSiL;
  if (name == "dsil" || name == "dSiL") return Activation::kDSiL;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

namespace {

double activate(Activation a, double z) noexcept {
  return a == Activation::kSiL ? sil(z) : dsil(z);
}

double activate_prime(Activation a, double z) noexcept {
  return a == Activation::kSiL ? dsil(z) : dsil_prime(z);
}

void hidden_preactivations(const Network& net, std::span<const double> s, std::span<double> z) {
  const std::size_t hidden = net.hidden_dim();
  const auto params = net.parameters();
  std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(net.b_hidden_offset()), hidden,
              z.begin());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s[i];
    if (x == 0.0) continue;
    const double* row = params.data() + i * hidden;
    for (std::size_t k = 0; k < hidden; ++k) z[k] += x * row[k];
  }
}

// outputs = b_out + a^T w_out, where a is either the hidden activations or the
// raw inputs when the hidden layer is bypassed (no b_out then).
void output_layer(const Network& net, std::span<const double> a, std::span<double> outputs) {
  const std::size_t out = net.output_dim();
  const auto params = net.parameters();
  const double* w = params.data() + net.w_out_offset();
  if (net.has_output_bias())
    std::copy_n(params.data() + net.b_out_offset(), out, outputs.begin());
  else
    std::fill(outputs.begin(), outputs.end(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k];
    if (x == 0.0) continue;
    const double* row = w + k * out;
    for (std::size_t j = 0; j < out; ++j) outputs[j] += x * row[j];
  }
}

void check_input(const Network& net, std::span<const double> s) {
  if (s.size() != net.input_dim())
    throw std::invalid_argument("network input has " + std::to_string(s.size()) +
                                " features, expected " + std::to_string(net.input_dim()));
}

}  // namespace

Network::Network(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                 Activation activation)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      output_dim_(output_dim),
      activation_(activation) {
  if (input_dim == 0 || output_dim == 0)
    throw std::invalid_argument("network needs at least one input and one output");
  params_.assign(input_dim * hidden_dim + hidden_dim + width() * output_dim +
                     (has_output_bias() ? output_dim : 0),
                 0.0);
}

Network Network::random(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                        Activation activation, Rng& rng) {
  Network net(input_dim, hidden_dim, output_dim, activation);
  auto fill = [&](std::size_t begin, std::size_t end, std::size_t fan_in) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t p = begin; p < end; ++p) net.params_[p] = dist(rng);
  };
  fill(net.w_in_offset(), net.w_out_offset(), input_dim);
  fill(net.w_out_offset(), net.params_.size(), net.width());
  return net;
}

bool Network::all_finite() const noexcept {
  return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
}

ForwardResult forward(const Network& net, std::span<const double> s) {
  check_input(net, s);
  ForwardResult r;
  r.outputs.resize(net.output_dim());
  if (net.bypassed()) {
    output_layer(net, s, r.outputs);
    return r;
  }
  r.hidden_pre.resize(net.hidden_dim());
  hidden_preactivations(net, s, r.hidden_pre);
  std::vector<double> a(net.hidden_dim());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = activate(net.activation(), r.hidden_pre[k]);
  output_layer(net, a, r.outputs);
  return r;
}

void forward_outputs(const Network& net, std::span<const double> s, std::span<double> outputs) {
  check_input(net, s);
  assert(outputs.size() == net.output_dim());
  if (net.bypassed()) {
    output_layer(net, s, outputs);
    return;
  }
  thread_local std::vector<double> a;
  a.resize(net.hidden_dim());
  hidden_preactivations(net, s, a);
  for (double& v : a) v = activate(net.activation(), v);
  output_layer(net, a, outputs);
}

double evaluate(const Network& net, std::span<const double> s, std::size_t output_index) {
  if (net.output_dim() == 1 && output_index == 0) {
    double out = 0.0;
    forward_outputs(net, s, std::span<double>(&out, 1));
    return out;
  }
  return forward(net, s).outputs.at(output_index);
}

double value_and_gradient(const Network& net, std::span<const double> s,
                          std::size_t output_index, Gradient& grad) {
  check_input(net, s);
  if (output_index >= net.output_dim())
    throw std::out_of_range("gradient: output index out of range");
  const std::size_t out = net.output_dim();
  const auto params = net.parameters();
  grad.assign(params.size(), 0.0);

  const double* w_out = params.data() + net.w_out_offset();
  double value = 0.0;

  if (net.bypassed()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      grad[net.w_out_offset() + i * out + output_index] = s[i];
      value += s[i] * w_out[i * out + output_index];
    }
    return value;
  }

  value = params[net.b_out_offset() + output_index];
  grad[net.b_out_offset() + output_index] = 1.0;
  const std::size_t hidden = net.hidden_dim();
  thread_local std::vector<double> z;
  z.resize(hidden);
  hidden_preactivations(net, s, z);
  thread_local std::vector<double> g;
  g.resize(hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    const double a = activate(net.activation(), z[k]);
    const double w = w_out[k * out + output_index];
    value += a * w;
    grad[net.w_out_offset() + k * out + output_index] = a;
    g[k] = w * activate_prime(net.activation(), z[k]);
    grad[net.b_hidden_offset() + k] = g[k];
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s[i];
    if (x == 0.0) continue;
    double* row = grad.data() + i * hidden;
    for (std::size_t k = 0; k < hidden; ++k) row[k] = x * g[k];
  }
  return value;
}

Gradient gradient(const Network& net, std::span<const double> s, std::size_t output_index) {
  Gradient grad;
  value_and_gradient(net, s, output_index, grad);
  return grad;
}

void accumulate_trace(TraceVector& e, std::span<const double> grad, double gamma, double lambda) {
  if (e.size() != grad.size()) throw std::invalid_argument("trace and gradient shapes differ");
  const double decay = gamma * lambda;
  for (std::size_t p = 0; p < e.size(); ++p) e[p] = decay * e[p] + grad[p];
}

void apply_update(Network& net, std::span<const double> e, double alpha, double delta) {
  auto params = net.parameters();
  if (e.size() != params.size()) throw std::invalid_argument("trace and network shapes differ");
  const double step = alpha * delta;
  for (std::size_t p = 0; p < params.size(); ++p) params[p] += step * e[p];
}

void to_json(nlohmann::json& j, const Network& net) {
  const auto params = net.parameters();
  j = nlohmann::json{{"version", kNetworkFormatVersion},
                     {"input_dim", net.input_dim()},
                     {"hidden_dim", net.hidden_dim()},
                     {"output_dim", net.output_dim()},
                     {"activation", to_string(net.activation())},
                     {"parameters", std::vector<double>(params.begin(), params.end())}};
}

void from_json(const nlohmann::json& j, Network& net) {
  const int version = j.at("version").get<int>();
  if (version != kNetworkFormatVersion)
    throw std::runtime_error("unsupported network format version " + std::to_string(version));
  Network loaded(j.at("input_dim").get<std::size_t>(), j.at("hidden_dim").get<std::size_t>(),
                 j.at("output_dim").get<std::size_t>(),
                 activation_from_string(j.at("activation").get<std::string>()));
  const auto& values = j.at("parameters");
  auto params = loaded.parameters();
  if (values.size() != params.size())
    throw std::runtime_error("network checkpoint has " + std::to_string(values.size()) +
                             " parameters, expected " + std::to_string(params.size()));
  for (std::size_t p = 0; p < params.size(); ++p) params[p] = values[p].get<double>();
  net = std::move(loaded);
}

}  // namespace ompac
