#include "ompac/metaparams.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ompac {

double& MetaParams::field(std::size_t k) {
  switch (k) {
    case 0: return alpha;
    case 1: return gamma;
    case 2: return lambda;
    case 3: return tau0;
    case 4: return tauk;
  }
  throw std::out_of_range("MetaParams field index " + std::to_string(k));
}

double MetaParams::field(std::size_t k) const {
  return const_cast<MetaParams&>(*this).field(k);
}

bool MetaParams::valid() const noexcept {
  auto finite = [](double x) { return std::isfinite(x); };
  return finite(alpha) && finite(gamma) && finite(lambda) && finite(tau0) && finite(tauk) &&
         alpha > 0.0 && alpha <= 1.0 && gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 &&
         lambda <= 1.0 && tau0 > 0.0 && tauk >= 0.0;
}

MetaParams clamp(MetaParams psi) noexcept {
  psi.alpha = std::clamp(psi.alpha, kAlphaFloor, 1.0);
  psi.gamma = std::clamp(psi.gamma, 0.0, 1.0);
  psi.lambda = std::clamp(psi.lambda, 0.0, 1.0);
  psi.tau0 = std::max(psi.tau0, kTau0Floor);
  psi.tauk = std::max(psi.tauk, 0.0);
  return psi;
}

double noise_stddev(double psi, bool bounded, double eta_n) {
  if (!(eta_n >= 0.0)) throw std::invalid_argument("noise_stddev: eta_n must be non-negative");
  if (bounded) {
    if (psi < 0.0 || psi > 1.0)
      throw std::invalid_argument("noise_stddev: bounded value outside [0, 1]");
    return psi <= 0.5 ? psi * eta_n : (1.0 - psi) * eta_n;
  }
  if (psi < 0.0) throw std::invalid_argument("noise_stddev: negative unbounded value");
  return psi * eta_n;
}

namespace {

double perturb(double value, std::size_t k, double eta_n, Rng& rng) {
  const double sd = noise_stddev(value, MetaParams::is_bounded(k), eta_n);
  // Always consume the normal draw so the stream layout does not depend on sd.
  const double eps = standard_normal(rng) * sd;
  return value + eps;
}

}  // namespace

MetaParams mutate(const MetaParams& psi, const NoiseConfig& cfg, Rng& rng) {
  MetaParams out = psi;
  bool touched = false;
  for (std::size_t k = 0; k < MetaParams::kFieldCount; ++k) {
    if (uniform01(rng) < cfg.p_n) {
      out.field(k) = perturb(psi.field(k), k, cfg.eta_n, rng);
      touched = true;
    }
  }
  return touched ? clamp(out) : out;
}

std::vector<MetaParams> init_population(const MetaParams& start, std::size_t n,
                                        const NoiseConfig& cfg, Rng& rng) {
  std::vector<MetaParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MetaParams psi = start;
    for (std::size_t k = 0; k < MetaParams::kFieldCount; ++k)
      psi.field(k) = perturb(start.field(k), k, cfg.eta_n, rng);
    out.push_back(clamp(psi));
  }
  return out;
}

void to_json(nlohmann::json& j, const MetaParams& psi) {
  j = nlohmann::json{{"alpha", psi.alpha},
                     {"gamma", psi.gamma},
                     {"lambda", psi.lambda},
                     {"tau0", psi.tau0},
                     {"tauk", psi.tauk}};
}

void from_json(const nlohmann::json& j, MetaParams& psi) {
  MetaParams def;
  psi.alpha = j.value("alpha", def.alpha);
  psi.gamma = j.value("gamma", def.gamma);
  psi.lambda = j.value("lambda", def.lambda);
  psi.tau0 = j.value("tau0", def.tau0);
  psi.tauk = j.value("tauk", def.tauk);
}

void to_json(nlohmann::json& j, const NoiseConfig& cfg) {
  j = nlohmann::json{{"p_n", cfg.p_n}, {"eta_n", cfg.eta_n}};
}

void from_json(const nlohmann::json& j, NoiseConfig& cfg) {
  NoiseConfig def;
  cfg.p_n = j.value("p_n", def.p_n);
  cfg.eta_n = j.value("eta_n", def.eta_n);
}

}  // namespace ompac
