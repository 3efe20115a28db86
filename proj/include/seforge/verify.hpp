#pragma once

// Independent reference implementations (oracles) used by the test suites and
// by `seforge verify`. Nothing here shares code paths with the routines it checks.

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "seforge/agent_config.hpp"
#include "seforge/environment.hpp"
#include "seforge/mlp.hpp"

namespace seforge::verify {

// --- networks ---------------------------------------------------------------

/// Forward pass with plain nested loops over the documented parameter layout.
std::vector<double> naive_forward(const MlpArchitecture& arch, const std::vector<double>& params,
                                  const std::vector<double>& input);

/// Central differences of f at x, one coordinate at a time.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h, const std::vector<std::size_t>& coords);

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-3);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Backward of L = upstream . forward(input) against central differences over
/// up to `max_coords` random coordinates (all of them when the net is smaller).
GradientCheck check_mlp_gradient(const MlpArchitecture& arch, Rng& rng, std::size_t max_coords = 100,
                                 double h = 1e-6);

// --- physics fixtures --------------------------------------------------------

struct FixtureRow {
  long step = 0;
  long action = -1;
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
  std::vector<double> raw_state;  // trailing columns, Acrobot only
};

/// Reads one trajectory CSV (header + rows). Throws Error on malformed input.
std::vector<FixtureRow> read_trajectory(const std::filesystem::path& path, std::size_t obs_dim);

struct TrajectoryComparison {
  double max_abs_deviation = 0.0;
  std::size_t steps = 0;
  std::size_t reward_mismatches = 0;
  std::size_t done_mismatches = 0;

  bool ok(double tol) const { return max_abs_deviation < tol && reward_mismatches == 0 && done_mismatches == 0; }
};

/// Replays the fixture's actions from its initial state through the library's
/// dynamics (termination ignored for the state, rewards compared up to the
/// first terminal step).
TrajectoryComparison compare_cartpole(const std::vector<FixtureRow>& rows);
TrajectoryComparison compare_acrobot(const std::vector<FixtureRow>& rows);

std::filesystem::path default_fixture_dir();
std::filesystem::path default_data_dir();

// --- small MDP ---------------------------------------------------------------

/// Two states, two actions, deterministic: action 0 stays, action 1 switches.
/// Rewards r(s0, stay) = 0, r(s0, switch) = 1, r(s1, stay) = 2, r(s1, switch) = 0.
/// Observations are one-hot; episodes end by time limit only.
class TwoStateMdp final : public Environment {
 public:
  explicit TwoStateMdp(std::size_t episode_length = 20);

  const TaskSpec& task() const override { return task_; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::size_t action) override;
  const EnvState& state() const override { return state_; }

  static std::vector<double> observation(std::size_t s);
  static double reward(std::size_t s, std::size_t a);
  static std::size_t next(std::size_t s, std::size_t a);

 private:
  TaskSpec task_;
  EnvState state_;
  std::size_t current_ = 0;
  bool active_ = false;
};

using QTable = std::array<std::array<double, 2>, 2>;

/// Value iteration to convergence on TwoStateMdp.
QTable two_state_q_star(double gamma, double tol = 1e-14);

inline constexpr double kTwoStateGamma = 0.5;

/// Small agent settings for TwoStateMdp (discount kTwoStateGamma, always exploring).
AgentConfig two_state_agent_config(AgentKind kind);

struct TwoStateOutcome {
  std::array<std::size_t, 2> greedy{};  // greedy action per state
  QTable q{};                           // DDQN variants only
  std::size_t env_steps = 0;
};

/// Trains a fresh agent on TwoStateMdp for `steps` environment steps.
TwoStateOutcome train_two_state(AgentKind kind, std::uint64_t seed, std::size_t steps = 5000);

// --- quick checks ------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

CheckResult check_physics_oracle(const std::filesystem::path& fixture_dir, double tol = 1e-9);
CheckResult check_gradients(std::uint64_t seed, std::size_t architectures = 20, double tol = 1e-5);
CheckResult check_nes_math();
CheckResult check_stop_heuristics();

std::vector<CheckResult> run_quick_checks(const std::filesystem::path& fixture_dir);

}  // namespace seforge::verify
