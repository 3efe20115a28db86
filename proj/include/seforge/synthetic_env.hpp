#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "seforge/environment.hpp"
#include "seforge/mlp.hpp"
#include "seforge/transition.hpp"

namespace seforge {

struct SyntheticEnvMeta {
  std::int64_t nes_iteration = -1;
  double eval_score = 0.0;
  std::uint64_t run_seed = 0;

  bool operator==(const SyntheticEnvMeta&) const = default;
};

/// A learned stateless MDP: MLP(state ++ one_hot(action)) -> (next_state ++ reward).
struct SyntheticEnvSpec {
  TaskSpec task;
  MlpArchitecture arch;
  FlatParams params;
  SyntheticEnvMeta meta;

  /// Throws ShapeError/NumericalError when dims disagree with the task or params are not finite.
  void validate() const;
};

inline constexpr int kCheckpointSchemaVersion = 1;

/// Architecture of an SE for `task`: input obs_dim + n_actions, output obs_dim + 1.
MlpArchitecture synthetic_architecture(const TaskSpec& task, std::vector<std::size_t> hidden_sizes,
                                       Activation activation);

/// SE with freshly initialized parameters.
SyntheticEnvSpec make_synthetic_env(const TaskSpec& task, std::vector<std::size_t> hidden_sizes,
                                    Activation activation, Rng& rng);

struct SeOutput {
  std::vector<double> next_state;
  double reward = 0.0;
};

SeOutput se_step(const SyntheticEnvSpec& spec, std::span<const double> state, std::size_t action);

/// Batched se_step over rows of (state, action).
Matrix se_step_batch(const SyntheticEnvSpec& spec, const Matrix& states, std::span<const std::size_t> actions);

/// Environment adaptor over an SE. Episodes start from the real task's reset
/// distribution, never terminate physically and end with TimeLimit after
/// task.max_episode_length steps. Throws NumericalError on non-finite outputs.
class SyntheticEnv final : public Environment {
 public:
  explicit SyntheticEnv(std::shared_ptr<const SyntheticEnvSpec> spec);

  const TaskSpec& task() const override { return spec_->task; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::size_t action) override;
  const EnvState& state() const override { return state_; }

  const SyntheticEnvSpec& spec() const { return *spec_; }

 private:
  std::shared_ptr<const SyntheticEnvSpec> spec_;
  EnvState state_;
  bool active_ = false;
};

using Policy = std::function<std::size_t(std::span<const double>)>;

/// Rolls out max_steps transitions of `policy` on the SE; terminal is always false.
std::vector<Transition> se_episode(const SyntheticEnvSpec& spec, const Policy& policy, std::size_t max_steps,
                                   Rng& rng);

void save_se(const SyntheticEnvSpec& spec, const std::filesystem::path& path);
/// Throws CheckpointError on unreadable/corrupt files or unknown schema versions.
SyntheticEnvSpec load_se(const std::filesystem::path& path);
/// As load_se, additionally requiring the checkpoint to proxy `expected`.
SyntheticEnvSpec load_se(const std::filesystem::path& path, const TaskSpec& expected);

}  // namespace seforge
