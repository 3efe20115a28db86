#pragma once

#include <cstddef>

#include "seforge/agent_config.hpp"
#include "seforge/rng.hpp"

namespace seforge {

/// Random agent hyperparameters for robustness studies. Learning rate, batch
/// size and hidden size are log-uniform (integers rounded in linear space),
/// hidden layer count is uniform.
struct HpSampler {
  double lr_min = 1e-3 / 3.0;
  double lr_max = 3e-3;
  std::size_t batch_min = 42;
  std::size_t batch_max = 384;
  std::size_t hidden_min = 42;
  std::size_t hidden_max = 384;
  std::size_t layers_min = 1;
  std::size_t layers_max = 3;

  /// `base` with the four varied fields replaced.
  AgentConfig sample(const AgentConfig& base, Rng& rng) const;

  double sample_learning_rate(Rng& rng) const;
  std::size_t sample_batch_size(Rng& rng) const;
  std::size_t sample_hidden_size(Rng& rng) const;
  std::size_t sample_hidden_layers(Rng& rng) const;

  bool in_range(const AgentConfig& cfg) const;
};

/// Log-uniform integer in [lo, hi].
std::size_t log_uniform_int(std::size_t lo, std::size_t hi, Rng& rng);

}  // namespace seforge
