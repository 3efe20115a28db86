#include "seforge/synthetic_env.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seforge/error.hpp"

namespace seforge {

using nlohmann::json;

void SyntheticEnvSpec::validate() const {
  arch.validate();
  if (arch.input_dim != task.obs_dim + task.n_actions || arch.output_dim != task.obs_dim + 1) {
    throw ShapeError("synthetic env architecture " + std::to_string(arch.input_dim) + "->" +
                     std::to_string(arch.output_dim) + " does not match task " + task.name);
  }
  if (params.size() != arch.parameter_count()) throw ShapeError("synthetic env parameter count mismatch");
  if (!params.all_finite()) throw NumericalError("synthetic env parameters are not finite");
}

MlpArchitecture synthetic_architecture(const TaskSpec& task, std::vector<std::size_t> hidden_sizes,
                                       Activation activation) {
  MlpArchitecture arch{task.obs_dim + task.n_actions, task.obs_dim + 1, std::move(hidden_sizes), activation};
  arch.validate();
  return arch;
}

SyntheticEnvSpec make_synthetic_env(const TaskSpec& task, std::vector<std::size_t> hidden_sizes,
                                    Activation activation, Rng& rng) {
  SyntheticEnvSpec spec{task, synthetic_architecture(task, std::move(hidden_sizes), activation), {}, {}};
  spec.params = init_params(spec.arch, rng);
  return spec;
}

namespace {

void check_input(const SyntheticEnvSpec& spec, std::size_t state_len, std::size_t action) {
  if (state_len != spec.task.obs_dim) {
    throw ShapeError("se_step: state has length " + std::to_string(state_len) + ", task expects " +
                     std::to_string(spec.task.obs_dim));
  }
  if (action >= spec.task.n_actions) {
    throw ShapeError("se_step: action " + std::to_string(action) + " outside [0, " +
                     std::to_string(spec.task.n_actions) + ")");
  }
}

}  // namespace

SeOutput se_step(const SyntheticEnvSpec& spec, std::span<const double> state, std::size_t action) {
  check_input(spec, state.size(), action);
  std::vector<double> input(spec.arch.input_dim, 0.0);
  std::copy(state.begin(), state.end(), input.begin());
  input[state.size() + action] = 1.0;
  auto out = forward(spec.arch, spec.params, input);
  SeOutput r;
  r.reward = out.back();
  out.pop_back();
  r.next_state = std::move(out);
  return r;
}

Matrix se_step_batch(const SyntheticEnvSpec& spec, const Matrix& states, std::span<const std::size_t> actions) {
  if (static_cast<std::size_t>(states.rows()) != actions.size()) throw ShapeError("se_step_batch: row count mismatch");
  const auto obs = static_cast<Eigen::Index>(spec.task.obs_dim);
  Matrix input = Matrix::Zero(states.rows(), static_cast<Eigen::Index>(spec.arch.input_dim));
  for (Eigen::Index r = 0; r < states.rows(); ++r) {
    check_input(spec, static_cast<std::size_t>(states.cols()), actions[static_cast<std::size_t>(r)]);
    input.row(r).head(obs) = states.row(r);
    input(r, obs + static_cast<Eigen::Index>(actions[static_cast<std::size_t>(r)])) = 1.0;
  }
  return forward_batch(spec.arch, spec.params, input);
}

SyntheticEnv::SyntheticEnv(std::shared_ptr<const SyntheticEnvSpec> spec) : spec_(std::move(spec)) {
  spec_->validate();
}

std::vector<double> SyntheticEnv::reset(Rng& rng) {
  state_.observation = sample_initial_observation(spec_->task, rng);
  state_.step_count = 0;
  active_ = true;
  return state_.observation;
}

StepResult SyntheticEnv::step(std::size_t action) {
  if (!active_) throw StateError("synthetic env: step called on a finished or unstarted episode");
  SeOutput out = se_step(*spec_, state_.observation, action);
  if (!std::isfinite(out.reward)) throw NumericalError("synthetic env produced a non-finite reward");
  for (double v : out.next_state) {
    if (!std::isfinite(v)) throw NumericalError("synthetic env produced a non-finite state");
  }
  StepResult r;
  r.next_obs = std::move(out.next_state);
  r.reward = out.reward;
  state_.observation = r.next_obs;
  ++state_.step_count;
  if (state_.step_count >= spec_->task.max_episode_length) {
    r.done = true;
    r.done_cause = DoneCause::TimeLimit;
  }
  active_ = !r.done;
  return r;
}

std::vector<Transition> se_episode(const SyntheticEnvSpec& spec, const Policy& policy, std::size_t max_steps,
                                   Rng& rng) {
  std::vector<Transition> out;
  out.reserve(max_steps);
  std::vector<double> s = sample_initial_observation(spec.task, rng);
  for (std::size_t t = 0; t < max_steps; ++t) {
    const std::size_t a = policy(s);
    SeOutput o = se_step(spec, s, a);
    out.push_back(Transition{s, a, o.reward, o.next_state, false, {}});
    s = std::move(o.next_state);
  }
  return out;
}

// --- checkpoints ------------------------------------------------------------

namespace {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw CheckpointError("checkpoint: bad real value '" + s + "'");
  return v;
}

json task_to_json(const TaskSpec& t) {
  return {{"name", t.name},
          {"obs_dim", t.obs_dim},
          {"n_actions", t.n_actions},
          {"max_episode_length", t.max_episode_length},
          {"solved_reward", t.solved_reward}};
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.name = j.at("name").get<std::string>();
  try {
    t = task_by_name(t.name);
  } catch (const ConfigError&) {
    t.kind = TaskKind::Custom;
  }
  t.obs_dim = j.at("obs_dim").get<std::size_t>();
  t.n_actions = j.at("n_actions").get<std::size_t>();
  t.max_episode_length = j.at("max_episode_length").get<std::size_t>();
  t.solved_reward = j.at("solved_reward").get<double>();
  return t;
}

}  // namespace

void save_se(const SyntheticEnvSpec& spec, const std::filesystem::path& path) {
  spec.validate();
  json params = json::array();
  for (double v : spec.params.values) params.push_back(hex_double(v));
  json j = {{"schema_version", kCheckpointSchemaVersion},
            {"task", task_to_json(spec.task)},
            {"arch",
             {{"input_dim", spec.arch.input_dim},
              {"output_dim", spec.arch.output_dim},
              {"hidden_sizes", spec.arch.hidden_sizes},
              {"activation", std::string(to_string(spec.arch.activation))}}},
            {"params", std::move(params)},
            {"meta",
             {{"nes_iteration", spec.meta.nes_iteration},
              {"eval_score", spec.meta.eval_score},
              {"run_seed", spec.meta.run_seed}}}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

SyntheticEnvSpec load_se(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  SyntheticEnvSpec spec;
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      throw CheckpointError("checkpoint schema version " + std::to_string(version) + " unsupported (expected " +
                            std::to_string(kCheckpointSchemaVersion) + ")");
    }
    spec.task = task_from_json(j.at("task"));
    const json& a = j.at("arch");
    spec.arch.input_dim = a.at("input_dim").get<std::size_t>();
    spec.arch.output_dim = a.at("output_dim").get<std::size_t>();
    spec.arch.hidden_sizes = a.at("hidden_sizes").get<std::vector<std::size_t>>();
    spec.arch.activation = parse_activation(a.at("activation").get<std::string>());
    for (const auto& v : j.at("params")) spec.params.values.push_back(parse_double(v.get<std::string>()));
    const json& m = j.at("meta");
    spec.meta.nes_iteration = m.at("nes_iteration").get<std::int64_t>();
    spec.meta.eval_score = m.at("eval_score").get<double>();
    spec.meta.run_seed = m.at("run_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + " has an invalid schema: " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw CheckpointError("checkpoint " + path.string() + ": " + e.what());
  }
  return spec;
}

SyntheticEnvSpec load_se(const std::filesystem::path& path, const TaskSpec& expected) {
  SyntheticEnvSpec spec = load_se(path);
  if (spec.task.name != expected.name || spec.task.obs_dim != expected.obs_dim ||
      spec.task.n_actions != expected.n_actions) {
    throw CheckpointError("checkpoint " + path.string() + " proxies task " + spec.task.name + ", expected " +
                          expected.name);
  }
  return spec;
}

}  // namespace seforge
