#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "seforge/agent_config.hpp"
#include "seforge/environment.hpp"
#include "seforge/nes.hpp"
#include "seforge/training.hpp"

namespace seforge {

/// Flat `key = value` text. `[section]` lines prefix the following keys with
/// `section.`; `#` and `;` start comments.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_count(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys never read through a getter.
  std::vector<std::string> unused_keys() const;
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string source_;
};

/// Everything one experiment needs: task, SE search settings and agent hyperparameters.
struct ExperimentConfig {
  TaskSpec task = cartpole_task();
  NesConfig nes;
  std::vector<std::size_t> se_hidden_sizes{128};
  Activation se_activation = Activation::LeakyReLU;
  bool hp_variation = false;
  AgentConfig ddqn = default_agent_config(AgentKind::DDQN);
  AgentConfig dueling_ddqn = default_agent_config(AgentKind::DuelingDDQN);
  AgentConfig td3 = default_agent_config(AgentKind::DiscreteTD3);
  TrainOptions train;
  std::size_t test_episodes = kTestEpisodes;

  const AgentConfig& agent(AgentKind kind) const;
};

/// Shared defaults for every task.
ExperimentConfig default_experiment_config(const TaskSpec& task);
/// Tuned SE-search presets.
ExperimentConfig cartpole_preset();
ExperimentConfig acrobot_preset();

/// Starts from the preset of `env.name` (when given) and applies every key.
/// Throws ConfigError on unknown keys or malformed values.
ExperimentConfig experiment_config_from(const KeyValueConfig& kv);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Serializes `cfg` in the same key format (round-trips through experiment_config_from).
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace seforge
