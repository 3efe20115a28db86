#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seforge/rng.hpp"

namespace seforge {

enum class TaskKind { CartPole, Acrobot, Custom };

/// Static description of a discrete-action episodic task.
struct TaskSpec {
  TaskKind kind = TaskKind::Custom;
  std::string name;
  std::size_t obs_dim = 0;
  std::size_t n_actions = 0;
  std::size_t max_episode_length = 0;
  double solved_reward = 0.0;

  bool operator==(const TaskSpec&) const = default;
};

TaskSpec cartpole_task();
TaskSpec acrobot_task();
/// "cartpole" / "CartPole-v0" / "acrobot" / "Acrobot-v1".
TaskSpec task_by_name(std::string_view name);

enum class DoneCause { None, Terminal, TimeLimit };

std::string_view to_string(DoneCause c);

struct StepResult {
  std::vector<double> next_obs;
  double reward = 0.0;
  bool done = false;
  DoneCause done_cause = DoneCause::None;
};

struct EnvState {
  std::vector<double> observation;
  std::size_t step_count = 0;
};

/// Episodic interface shared by real and synthetic environments.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const TaskSpec& task() const = 0;
  /// Starts a new episode and returns the initial observation.
  virtual std::vector<double> reset(Rng& rng) = 0;
  /// Throws StateError when the episode is already done or reset was never called.
  virtual StepResult step(std::size_t action) = 0;
  virtual const EnvState& state() const = 0;
};

// --- CartPole-v0 ------------------------------------------------------------

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kMassCart = 1.0;
inline constexpr double kMassPole = 0.1;
inline constexpr double kTotalMass = kMassCart + kMassPole;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kPoleMassLength = kMassPole * kHalfLength;
inline constexpr double kForceMag = 10.0;
inline constexpr double kTau = 0.02;
inline constexpr double kXThreshold = 2.4;
inline constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr double kResetBound = 0.05;

using State = std::array<double, 4>;  // x, x_dot, theta, theta_dot

/// One Euler step of the cart-pole dynamics; no termination logic.
State dynamics(const State& s, std::size_t action);
bool is_terminal(const State& s);
}  // namespace cartpole

/// StepResult for a known physical state (pure). Throws std::out_of_range for bad actions.
StepResult step_cartpole(const cartpole::State& s, std::size_t action);

class CartPoleEnv final : public Environment {
 public:
  CartPoleEnv();

  const TaskSpec& task() const override { return task_; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::size_t action) override;
  const EnvState& state() const override { return state_; }

  /// Sets the physical state directly and starts a fresh episode from it.
  void reset_to(const cartpole::State& s);

 private:
  TaskSpec task_;
  cartpole::State physical_{};
  EnvState state_;
  bool active_ = false;
};

// --- Acrobot-v1 -------------------------------------------------------------

namespace acrobot {
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDt = 0.2;
inline constexpr double kLinkLength1 = 1.0;
inline constexpr double kLinkMass1 = 1.0;
inline constexpr double kLinkMass2 = 1.0;
inline constexpr double kLinkComPos1 = 0.5;
inline constexpr double kLinkComPos2 = 0.5;
inline constexpr double kLinkMoi = 1.0;
inline constexpr double kGravity = 9.8;
inline constexpr double kMaxVel1 = 4.0 * kPi;
inline constexpr double kMaxVel2 = 9.0 * kPi;
inline constexpr std::array<double, 3> kTorques{-1.0, 0.0, 1.0};
inline constexpr double kResetBound = 0.1;

using State = std::array<double, 4>;  // theta1, theta2, dtheta1, dtheta2

/// RK4 step of the two-link dynamics followed by angle wrapping and velocity clipping.
State dynamics(const State& s, std::size_t action);
bool is_terminal(const State& s);
std::vector<double> observe(const State& s);
}  // namespace acrobot

StepResult step_acrobot(const acrobot::State& s, std::size_t action);

class AcrobotEnv final : public Environment {
 public:
  AcrobotEnv();

  const TaskSpec& task() const override { return task_; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::size_t action) override;
  const EnvState& state() const override { return state_; }

  void reset_to(const acrobot::State& s);

 private:
  TaskSpec task_;
  acrobot::State physical_{};
  EnvState state_;
  bool active_ = false;
};

/// Initial observation drawn from the task's reset distribution.
std::vector<double> sample_initial_observation(const TaskSpec& task, Rng& rng);

std::unique_ptr<Environment> make_real_env(const TaskSpec& task);

double cumulative_reward(std::span<const StepResult> episode);

}  // namespace seforge
