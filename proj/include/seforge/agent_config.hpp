#pragma once

#include <cstddef>
#include <string_view>

#include "seforge/mlp.hpp"

namespace seforge {

enum class AgentKind { DDQN, DuelingDDQN, DiscreteTD3 };

std::string_view to_string(AgentKind k);
AgentKind parse_agent_kind(std::string_view name);

struct AgentConfig {
  AgentKind kind = AgentKind::DDQN;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t hidden_size = 128;
  std::size_t hidden_layers = 2;
  double target_update_rate = 0.01;  // tau
  double discount = 0.99;            // gamma
  double eps_init = 0.809;
  double eps_min = 0.0371;
  double eps_decay = 0.9;
  std::size_t initial_episodes = 10;
  Activation activation = Activation::ReLU;
  std::size_t replay_buffer_size = 100000;
  // discrete TD3 only
  double gumbel_start_temperature = 1.0;
  std::size_t policy_delay = 2;

  /// Throws ConfigError on values no agent can run with.
  void validate() const;

  bool operator==(const AgentConfig&) const = default;
};

/// Shared defaults for all agents (learning rate and activation differ for TD3).
AgentConfig default_agent_config(AgentKind kind = AgentKind::DDQN);

/// Tuned DDQN settings used inside the SE search.
AgentConfig cartpole_search_ddqn_config();
AgentConfig acrobot_search_ddqn_config();

/// max(eps_min, eps_init * eps_decay^episode_index)
double epsilon_schedule(const AgentConfig& cfg, std::size_t episode_index);

}  // namespace seforge
