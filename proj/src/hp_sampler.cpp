#include "seforge/hp_sampler.hpp"

#include <algorithm>
#include <cmath>

namespace seforge {

std::size_t log_uniform_int(std::size_t lo, std::size_t hi, Rng& rng) {
  std::uniform_real_distribution<double> u(std::log(static_cast<double>(lo)), std::log(static_cast<double>(hi)));
  const auto v = static_cast<std::size_t>(std::llround(std::exp(u(rng))));
  return std::clamp(v, lo, hi);
}

double HpSampler::sample_learning_rate(Rng& rng) const {
  std::uniform_real_distribution<double> u(std::log(lr_min), std::log(lr_max));
  return std::clamp(std::exp(u(rng)), lr_min, lr_max);
}

std::size_t HpSampler::sample_batch_size(Rng& rng) const { return log_uniform_int(batch_min, batch_max, rng); }

std::size_t HpSampler::sample_hidden_size(Rng& rng) const { return log_uniform_int(hidden_min, hidden_max, rng); }

std::size_t HpSampler::sample_hidden_layers(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> u(layers_min, layers_max);
  return u(rng);
}

AgentConfig HpSampler::sample(const AgentConfig& base, Rng& rng) const {
  AgentConfig cfg = base;
  cfg.learning_rate = sample_learning_rate(rng);
  cfg.batch_size = sample_batch_size(rng);
  cfg.hidden_size = sample_hidden_size(rng);
  cfg.hidden_layers = sample_hidden_layers(rng);
  return cfg;
}

bool HpSampler::in_range(const AgentConfig& cfg) const {
  return cfg.learning_rate >= lr_min && cfg.learning_rate <= lr_max && cfg.batch_size >= batch_min &&
         cfg.batch_size <= batch_max && cfg.hidden_size >= hidden_min && cfg.hidden_size <= hidden_max &&
         cfg.hidden_layers >= layers_min && cfg.hidden_layers <= layers_max;
}

}  // namespace seforge
