#include "seforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "seforge/error.hpp"

namespace seforge {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string source) {
  KeyValueConfig kv;
  kv.source_ = std::move(source);
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw ConfigError(kv.source_ + ":" + std::to_string(line_no) + ": " + what);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (!section.empty()) key = section + "." + key;
    if (kv.values_.count(key)) fail("duplicate key '" + key + "'");
    kv.values_[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  char* end = nullptr;
  const double d = std::strtod(v->c_str(), &end);
  if (v->empty() || end != v->c_str() + v->size()) {
    throw ConfigError(source_ + ": key '" + key + "' expects a real number, got '" + *v + "'");
  }
  return d;
}

std::size_t KeyValueConfig::get_count(const std::string& key, std::size_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(source_ + ": key '" + key + "' expects a non-negative integer, got '" + *v + "'");
  }
  return n;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const std::string s = lower(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(source_ + ": key '" + key + "' expects true/false, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

const AgentConfig& ExperimentConfig::agent(AgentKind kind) const {
  switch (kind) {
    case AgentKind::DDQN:
      return ddqn;
    case AgentKind::DuelingDDQN:
      return dueling_ddqn;
    case AgentKind::DiscreteTD3:
      return td3;
  }
  return ddqn;
}

ExperimentConfig default_experiment_config(const TaskSpec& task) {
  ExperimentConfig cfg;
  cfg.task = task;
  return cfg;
}

ExperimentConfig cartpole_preset() {
  ExperimentConfig cfg = default_experiment_config(cartpole_task());
  cfg.nes = cartpole_nes_config();
  cfg.se_hidden_sizes = {83};
  cfg.se_activation = Activation::LeakyReLU;
  cfg.ddqn = cartpole_search_ddqn_config();
  cfg.dueling_ddqn = cfg.ddqn;
  cfg.dueling_ddqn.kind = AgentKind::DuelingDDQN;
  return cfg;
}

ExperimentConfig acrobot_preset() {
  ExperimentConfig cfg = default_experiment_config(acrobot_task());
  cfg.nes = acrobot_nes_config();
  cfg.se_hidden_sizes = {167};
  cfg.se_activation = Activation::PReLU;
  cfg.ddqn = acrobot_search_ddqn_config();
  cfg.dueling_ddqn = cfg.ddqn;
  cfg.dueling_ddqn.kind = AgentKind::DuelingDDQN;
  return cfg;
}

namespace {

void read_agent(const KeyValueConfig& kv, const std::string& s, AgentConfig& a) {
  a.initial_episodes = kv.get_count(s + ".initial_episodes", a.initial_episodes);
  a.batch_size = kv.get_count(s + ".batch_size", a.batch_size);
  a.learning_rate = kv.get_double(s + ".learning_rate", a.learning_rate);
  a.target_update_rate = kv.get_double(s + ".target_network_update_rate", a.target_update_rate);
  a.discount = kv.get_double(s + ".discount_factor", a.discount);
  a.eps_init = kv.get_double(s + ".initial_epsilon", a.eps_init);
  a.eps_min = kv.get_double(s + ".minimal_epsilon", a.eps_min);
  a.eps_decay = kv.get_double(s + ".epsilon_decay_factor", a.eps_decay);
  a.hidden_layers = kv.get_count(s + ".hidden_layers", a.hidden_layers);
  a.hidden_size = kv.get_count(s + ".hidden_size", a.hidden_size);
  if (auto v = kv.get(s + ".activation")) a.activation = parse_activation(*v);
  a.replay_buffer_size = kv.get_count(s + ".replay_buffer_size", a.replay_buffer_size);
  a.gumbel_start_temperature = kv.get_double(s + ".gumbel_start_temperature", a.gumbel_start_temperature);
  a.policy_delay = kv.get_count(s + ".policy_delay", a.policy_delay);
  a.validate();
}

}  // namespace

ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  const std::string preset = lower(kv.get_string("env.preset", "default"));
  const auto name = kv.get("env.name");
  const TaskSpec task = name ? task_by_name(*name) : cartpole_task();
  if (preset == "tuned") {
    cfg = task.kind == TaskKind::Acrobot ? acrobot_preset() : cartpole_preset();
  } else if (preset == "default") {
    cfg = default_experiment_config(task);
  } else {
    throw ConfigError(kv.source() + ": env.preset must be 'default' or 'tuned'");
  }
  cfg.task.max_episode_length = kv.get_count("env.max_episode_length", cfg.task.max_episode_length);
  cfg.task.solved_reward = kv.get_double("env.solved_reward", cfg.task.solved_reward);

  NesConfig& n = cfg.nes;
  n.alpha = kv.get_double("nes.step_size", n.alpha);
  n.sigma = kv.get_double("nes.std_dev", n.sigma);
  n.mirrored = kv.get_bool("nes.mirrored_sampling", n.mirrored);
  if (auto v = kv.get("nes.score_transformation")) n.transform = parse_score_transform(*v);
  const std::size_t se_layers = kv.get_count("nes.se_hidden_layers", cfg.se_hidden_sizes.size());
  const std::size_t se_size = kv.get_count("nes.se_hidden_size", cfg.se_hidden_sizes.front());
  cfg.se_hidden_sizes.assign(se_layers, se_size);
  if (auto v = kv.get("nes.se_activation")) cfg.se_activation = parse_activation(*v);
  n.outer_loops = kv.get_count("nes.outer_loops", n.outer_loops);
  n.population_size = kv.get_count("nes.population_size", n.population_size);
  n.solved_streak = kv.get_count("nes.solved_streak", n.solved_streak);
  n.evaluate_mean = kv.get_bool("nes.evaluate_mean", n.evaluate_mean);
  cfg.hp_variation = kv.get_bool("nes.hp_variation", cfg.hp_variation);
  cfg.train.max_episodes = kv.get_count("nes.max_train_episodes", cfg.train.max_episodes);
  cfg.test_episodes = kv.get_count("nes.test_episodes", cfg.test_episodes);
  n.validate();
  if (cfg.se_hidden_sizes.empty() || cfg.se_hidden_sizes.size() > 3 || se_size == 0) {
    throw ConfigError(kv.source() + ": SE needs 1-3 hidden layers of size >= 1");
  }

  read_agent(kv, "ddqn", cfg.ddqn);
  cfg.train.window = kv.get_count("ddqn.early_out_number", cfg.train.window);
  cfg.train.c_diff = kv.get_double("ddqn.early_out_difference", cfg.train.c_diff);
  if (cfg.train.window == 0) throw ConfigError(kv.source() + ": ddqn.early_out_number must be >= 1");

  // Dueling DDQN inherits the DDQN settings unless given its own section.
  cfg.dueling_ddqn = cfg.ddqn;
  cfg.dueling_ddqn.kind = AgentKind::DuelingDDQN;
  read_agent(kv, "dueling_ddqn", cfg.dueling_ddqn);
  read_agent(kv, "td3", cfg.td3);

  const auto unused = kv.unused_keys();
  if (!unused.empty()) {
    std::string msg = kv.source() + ": unknown key(s):";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from(KeyValueConfig::load(path));
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

void write_agent(std::ostringstream& out, const std::string& section, const AgentConfig& a) {
  out << "\n[" << section << "]\n"
      << "initial_episodes = " << a.initial_episodes << "\n"
      << "batch_size = " << a.batch_size << "\n"
      << "learning_rate = " << fmt(a.learning_rate) << "\n"
      << "target_network_update_rate = " << fmt(a.target_update_rate) << "\n"
      << "discount_factor = " << fmt(a.discount) << "\n"
      << "initial_epsilon = " << fmt(a.eps_init) << "\n"
      << "minimal_epsilon = " << fmt(a.eps_min) << "\n"
      << "epsilon_decay_factor = " << fmt(a.eps_decay) << "\n"
      << "hidden_layers = " << a.hidden_layers << "\n"
      << "hidden_size = " << a.hidden_size << "\n"
      << "activation = " << to_string(a.activation) << "\n"
      << "replay_buffer_size = " << a.replay_buffer_size << "\n"
      << "gumbel_start_temperature = " << fmt(a.gumbel_start_temperature) << "\n"
      << "policy_delay = " << a.policy_delay << "\n";
}

}  // namespace

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[env]\n"
      << "name = " << cfg.task.name << "\n"
      << "max_episode_length = " << cfg.task.max_episode_length << "\n"
      << "solved_reward = " << fmt(cfg.task.solved_reward) << "\n"
      << "\n[nes]\n"
      << "step_size = " << fmt(cfg.nes.alpha) << "\n"
      << "std_dev = " << fmt(cfg.nes.sigma) << "\n"
      << "mirrored_sampling = " << (cfg.nes.mirrored ? "true" : "false") << "\n"
      << "score_transformation = " << to_string(cfg.nes.transform) << "\n"
      << "se_hidden_layers = " << cfg.se_hidden_sizes.size() << "\n"
      << "se_hidden_size = " << cfg.se_hidden_sizes.front() << "\n"
      << "se_activation = " << to_string(cfg.se_activation) << "\n"
      << "outer_loops = " << cfg.nes.outer_loops << "\n"
      << "max_train_episodes = " << cfg.train.max_episodes << "\n"
      << "test_episodes = " << cfg.test_episodes << "\n"
      << "population_size = " << cfg.nes.population_size << "\n"
      << "solved_streak = " << cfg.nes.solved_streak << "\n"
      << "evaluate_mean = " << (cfg.nes.evaluate_mean ? "true" : "false") << "\n"
      << "hp_variation = " << (cfg.hp_variation ? "true" : "false") << "\n";
  write_agent(out, "ddqn", cfg.ddqn);
  out << "early_out_number = " << cfg.train.window << "\n"
      << "early_out_difference = " << fmt(cfg.train.c_diff) << "\n";
  write_agent(out, "dueling_ddqn", cfg.dueling_ddqn);
  write_agent(out, "td3", cfg.td3);
  return out.str();
}

}  // namespace seforge
