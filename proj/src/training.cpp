#include "seforge/training.hpp"

#include <cmath>
#include <numeric>

#include "seforge/error.hpp"
#include "seforge/synthetic_env.hpp"

namespace seforge {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

constexpr double kZeroGuard = 1e-8;

}  // namespace

bool se_stop_check(const StopHeuristicState& state) {
  const std::size_t d = state.d;
  if (d == 0 || state.returns.size() < 2 * d) return false;
  const std::span<const double> all(state.returns);
  const double recent = mean_of(all.last(d));
  const double previous = mean_of(all.subspan(all.size() - 2 * d, d));
  if (std::abs(previous) < kZeroGuard) return std::abs(recent) < kZeroGuard;
  return std::abs(recent - previous) / std::abs(previous) <= state.c_diff;
}

bool real_stop_check(std::span<const double> test_returns, const TaskSpec& task, std::size_t d) {
  if (d == 0 || test_returns.size() < d) return false;
  return mean_of(test_returns.last(d)) >= task.solved_reward;
}

std::string_view to_string(StopCause c) {
  switch (c) {
    case StopCause::Converged:
      return "converged";
    case StopCause::Solved:
      return "solved";
    case StopCause::MaxEpisodes:
      return "max_episodes";
  }
  return "?";
}

std::pair<double, std::size_t> run_greedy_episode(Agent& agent, Environment& env, Rng& rng,
                                                  const TransitionObserver& on_transition) {
  std::vector<double> obs = env.reset(rng);
  double total = 0.0;
  std::size_t steps = 0;
  for (;;) {
    const ActionChoice choice = agent.act(obs, ActMode::Greedy);
    StepResult r = env.step(choice.action);
    total += r.reward;
    ++steps;
    if (on_transition) {
      on_transition(Transition{obs, choice.action, r.reward, r.next_obs, r.done_cause == DoneCause::Terminal, {}});
    }
    obs = std::move(r.next_obs);
    if (r.done || steps >= env.task().max_episode_length) break;
  }
  return {total, steps};
}

TrainReport train_agent(Agent& agent, Environment& env, const TrainOptions& options, Rng& rng) {
  const bool synthetic = dynamic_cast<const SyntheticEnv*>(&env) != nullptr;
  std::unique_ptr<Environment> test_env;
  if (!synthetic && options.heuristics) test_env = make_real_env(env.task());

  TrainReport report;
  StopHeuristicState stop{{}, options.window, options.c_diff};
  const std::size_t warmup = agent.config().initial_episodes;

  for (std::size_t k = 0; k < options.max_episodes; ++k) {
    agent.begin_episode(k);
    std::vector<double> obs = env.reset(rng);
    double episode_return = 0.0;
    for (;;) {
      ActionChoice choice = k < warmup ? agent.random_action() : agent.act(obs, ActMode::Explore);
      StepResult r = env.step(choice.action);
      episode_return += r.reward;
      ++report.env_steps_used;
      Transition t{std::move(obs), choice.action, r.reward, r.next_obs, r.done_cause == DoneCause::Terminal,
                   std::move(choice.soft_action)};
      if (options.on_transition) options.on_transition(t);
      agent.observe(std::move(t));
      if (k >= warmup) agent.train_step();
      obs = std::move(r.next_obs);
      if (r.done) break;
    }
    report.episode_returns.push_back(episode_return);
    report.episodes_used = k + 1;
    if (!std::isfinite(episode_return)) throw NumericalError("training episode return is not finite");

    if (!options.heuristics) continue;
    if (synthetic) {
      stop.returns = report.episode_returns;
      if (se_stop_check(stop)) {
        report.stop_cause = StopCause::Converged;
        return report;
      }
    } else {
      const auto [test_return, test_steps] = run_greedy_episode(agent, *test_env, rng);
      report.test_returns.push_back(test_return);
      report.eval_steps_used += test_steps;
      if (real_stop_check(report.test_returns, env.task(), options.window)) {
        report.stop_cause = StopCause::Solved;
        return report;
      }
    }
  }
  report.stop_cause = StopCause::MaxEpisodes;
  return report;
}

EvalResult evaluate_agent(Agent& agent, Environment& env, std::size_t n_test, Rng& rng,
                          const TransitionObserver& on_transition) {
  EvalResult result;
  for (std::size_t i = 0; i < n_test; ++i) {
    const auto [ret, steps] = run_greedy_episode(agent, env, rng, on_transition);
    result.returns.push_back(ret);
    result.steps += steps;
  }
  result.mean = n_test == 0 ? 0.0 : mean_of(result.returns);
  return result;
}

EvalResult evaluate_agent(Agent& agent, const TaskSpec& task, std::size_t n_test, Rng& rng) {
  auto env = make_real_env(task);
  return evaluate_agent(agent, *env, n_test, rng);
}

}  // namespace seforge
