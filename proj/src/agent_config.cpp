#include "seforge/agent_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "seforge/error.hpp"

namespace seforge {

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::DDQN:
      return "ddqn";
    case AgentKind::DuelingDDQN:
      return "dueling_ddqn";
    case AgentKind::DiscreteTD3:
      return "td3_discrete";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "ddqn") return AgentKind::DDQN;
  if (s == "dueling_ddqn" || s == "duelingddqn" || s == "dueling") return AgentKind::DuelingDDQN;
  if (s == "td3_discrete" || s == "td3" || s == "discrete_td3" || s == "td3d") return AgentKind::DiscreteTD3;
  throw ConfigError("unknown agent kind '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("agent config: " + what); };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (hidden_size == 0) fail("hidden_size must be >= 1");
  if (hidden_layers < 1 || hidden_layers > 3) fail("hidden_layers must be in [1, 3]");
  if (!(target_update_rate > 0.0 && target_update_rate <= 1.0)) fail("target_update_rate must be in (0, 1]");
  if (!(discount >= 0.0 && discount < 1.0)) fail("discount must be in [0, 1)");
  if (!(eps_init >= 0.0 && eps_init <= 1.0)) fail("eps_init must be in [0, 1]");
  if (!(eps_min >= 0.0 && eps_min <= 1.0)) fail("eps_min must be in [0, 1]");
  if (!(eps_decay > 0.0 && eps_decay <= 1.0)) fail("eps_decay must be in (0, 1]");
  if (replay_buffer_size == 0) fail("replay_buffer_size must be >= 1");
  if (!(gumbel_start_temperature > 0.0)) fail("gumbel_start_temperature must be > 0");
  if (policy_delay == 0) fail("policy_delay must be >= 1");
}

AgentConfig default_agent_config(AgentKind kind) {
  AgentConfig cfg;
  cfg.kind = kind;
  if (kind == AgentKind::DiscreteTD3) {
    cfg.learning_rate = 0.0005;
    cfg.activation = Activation::Tanh;
  }
  return cfg;
}

AgentConfig cartpole_search_ddqn_config() {
  AgentConfig cfg;
  cfg.initial_episodes = 1;
  cfg.batch_size = 199;
  cfg.learning_rate = 0.000304;
  cfg.target_update_rate = 0.00848;
  cfg.discount = 0.988;
  cfg.eps_init = 0.809;
  cfg.eps_min = 0.0371;
  cfg.eps_decay = 0.961;
  cfg.hidden_layers = 1;
  cfg.hidden_size = 57;
  cfg.activation = Activation::Tanh;
  return cfg;
}

AgentConfig acrobot_search_ddqn_config() {
  AgentConfig cfg;
  cfg.initial_episodes = 20;
  cfg.batch_size = 149;
  cfg.learning_rate = 0.00222;
  cfg.target_update_rate = 0.0209;
  cfg.discount = 0.991;
  cfg.eps_init = 0.904;
  cfg.eps_min = 0.0471;
  cfg.eps_decay = 0.899;
  cfg.hidden_layers = 1;
  cfg.hidden_size = 112;
  cfg.activation = Activation::LeakyReLU;
  return cfg;
}

double epsilon_schedule(const AgentConfig& cfg, std::size_t episode_index) {
  return std::max(cfg.eps_min, cfg.eps_init * std::pow(cfg.eps_decay, static_cast<double>(episode_index)));
}

}  // namespace seforge
