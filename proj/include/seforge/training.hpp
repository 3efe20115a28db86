#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "seforge/agents.hpp"
#include "seforge/environment.hpp"
#include "seforge/transition.hpp"

namespace seforge {

inline constexpr std::size_t kDefaultWindow = 10;        // d
inline constexpr double kDefaultConvergenceDiff = 0.01;  // C_diff
inline constexpr std::size_t kMaxTrainEpisodes = 1000;
inline constexpr std::size_t kTestEpisodes = 10;

struct StopHeuristicState {
  std::vector<double> returns;
  std::size_t d = kDefaultWindow;
  double c_diff = kDefaultConvergenceDiff;
};

/// Convergence test on synthetic-env training returns: compares the mean of
/// the last d returns with the mean of the d returns before them. False until
/// 2d returns are recorded.
bool se_stop_check(const StopHeuristicState& state);

/// True once the mean of the last d test returns reaches the task's solved reward.
bool real_stop_check(std::span<const double> test_returns, const TaskSpec& task, std::size_t d = kDefaultWindow);

enum class StopCause { Converged, Solved, MaxEpisodes };

std::string_view to_string(StopCause c);

struct TrainReport {
  std::size_t episodes_used = 0;
  /// Steps taken in training episodes only.
  std::size_t env_steps_used = 0;
  /// Steps spent in the greedy test episodes that drive the real-env stop rule.
  std::size_t eval_steps_used = 0;
  StopCause stop_cause = StopCause::MaxEpisodes;
  std::vector<double> episode_returns;
  std::vector<double> test_returns;
};

using TransitionObserver = std::function<void(const Transition&)>;

struct TrainOptions {
  std::size_t max_episodes = kMaxTrainEpisodes;
  std::size_t window = kDefaultWindow;
  double c_diff = kDefaultConvergenceDiff;
  bool heuristics = true;
  /// Called for every training transition, in order.
  TransitionObserver on_transition;
};

/// Trains `agent` episodically on `env`. Synthetic environments use the
/// convergence heuristic; real ones run one greedy test episode on a separate
/// instance after every training episode and stop once solved.
TrainReport train_agent(Agent& agent, Environment& env, const TrainOptions& options, Rng& rng);

struct EvalResult {
  std::vector<double> returns;
  double mean = 0.0;
  std::size_t steps = 0;
};

/// Greedy episodes on `env`, at most max_episode_length steps each. Does not
/// train or store transitions.
EvalResult evaluate_agent(Agent& agent, Environment& env, std::size_t n_test, Rng& rng,
                          const TransitionObserver& on_transition = {});
/// Same on a fresh instance of the real task.
EvalResult evaluate_agent(Agent& agent, const TaskSpec& task, std::size_t n_test, Rng& rng);

/// One greedy episode; returns (cumulative reward, steps).
std::pair<double, std::size_t> run_greedy_episode(Agent& agent, Environment& env, Rng& rng,
                                                  const TransitionObserver& on_transition = {});

}  // namespace seforge
